"""Build the two-quad scene, render its G-buffer and look at the CoC map."""

from pathlib import Path

import numpy as np

from hybrid_dof.camera import coc_radius
from hybrid_dof.gbuffer import render_gbuffer
from hybrid_dof.imageio import write_png
from hybrid_dof.postprocess import build_coc_map
from hybrid_dof.scenes import camera_from_key, load_builtin

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

# A checkered wall at the focus distance and a small red quad at a third of it.
scene, keys = load_builtin("two_quad")
cam = camera_from_key(keys[0])
print(f"camera {cam.width}x{cam.height}, aperture {cam.aperture:.5f} m, "
      f"focus {cam.focus_distance} m, far-field CoC {cam.coc_scale:.2f} px")

# Thin-lens CoC: zero on the focus plane, negative in front, positive behind.
for z in (1.0, 2.0, 3.0, 6.0, np.inf):
    print(f"  z = {z:5}  r = {coc_radius(z, cam):+7.3f} px")

gb = render_gbuffer(scene, cam, 0)
coc = build_coc_map(gb, cam)
print(f"near quad CoC {coc.coc.min():.2f} px, tiles {coc.tile_max.shape}, "
      f"max near tile {coc.tile_near_max.max():.2f} px")

write_png(out / "01_sharp.png", gb.color)
# Near CoC in red, far CoC in blue, scaled to the largest magnitude.
vis = np.zeros(gb.color.shape)
scale = np.abs(coc.coc).max()
vis[..., 0] = np.clip(-coc.coc / scale, 0, 1)
vis[..., 2] = np.clip(coc.coc / scale, 0, 1)
write_png(out / "01_coc.png", vis)
print(f"wrote {out / '01_sharp.png'} and {out / '01_coc.png'}")

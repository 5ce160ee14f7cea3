"""FBP with every filter on the desk-scale sinogram, plus a denser scan for reference."""

import dataclasses

from gptomo.experiment import ReplicaConfig, prepare
from gptomo.fbp import FilterKind, fbp_reconstruct
from gptomo.metrics import evaluate


def main():
    for label, cfg in [("9 angles", ReplicaConfig()),
                       ("90 angles", dataclasses.replace(ReplicaConfig(), n_angles=90))]:
        data = prepare(cfg)
        print(f"{label}: {cfg.n_angles} x {cfg.n_rays} rays, noise sigma {cfg.noise_sigma:.4f}")
        for kind in FilterKind:
            m = evaluate(data.truth, fbp_reconstruct(data.sinogram, data.grid, kind))
            print(f"  {kind.value:<11s} RE {m.relative_error:6.2f}%  PSNR {m.psnr:6.2f} dB")


if __name__ == "__main__":
    main()

"""Reference values computed independently of the package.

Regenerate with ``python tests/oracles.py``.
"""
import numpy as np

# 25 * int_0^1 int_0^1 sin(2 pi t s) s (1 - s) (1 - t) ds dt, scipy.integrate.dblquad
DEV2_OF_ONE = 1.0913818119111616
# sum_{j <= 20} j^-2, expected squared norm of the cosine process
FP_SQUARED_NORM = 1.5961632439130233
# log(100) * 3 / 95
SIC_PENALTY_100_3 = 0.14542642692593974


def dev2_of_one() -> float:
    from scipy.integrate import dblquad

    val, _ = dblquad(
        lambda s, t: np.sin(2 * np.pi * t * s) * s * (1 - s) * (1 - t), 0, 1, 0, 1, epsabs=1e-13, epsrel=1e-13
    )
    return 25 * val


def dev2_of_one_trapezoid(G: int = 2000) -> float:
    t = np.linspace(0, 1, G)
    w = np.full(G, 1 / (G - 1))
    w[[0, -1]] /= 2
    s, u = np.meshgrid(t, t, indexing="ij")
    return float(25 * w @ (np.sin(2 * np.pi * s * u) * s * (1 - s) * (1 - u)) @ w)


if __name__ == "__main__":
    print("dev2(1), dblquad:", repr(dev2_of_one()))
    print("dev2(1), G=2000 trapezoid:", repr(dev2_of_one_trapezoid()))
    print("sum j^-2, j<=20:", repr(float(np.sum(1.0 / np.arange(1, 21) ** 2))))
    print("SIC penalty n=100 k=3:", repr(float(np.log(100) * 3 / 95)))

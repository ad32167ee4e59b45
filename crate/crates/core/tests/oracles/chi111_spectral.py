"""Fourier-collocation oracle for the second-order cell field chi^{111} of the
c-bad coefficient.

Everything is computed spectrally from the coefficient alone: the corrector
v^{11}, the flux a11 * d1 v^{11}, its r-weighted mean c, and chi. Writes the
mean-zero nodal values on the 64x64 torus grid as a text field file.

    python3 chi111_spectral.py > chi111_n64.txt
"""
import numpy as np

N = 64
TWO_PI = 2 * np.pi


def fourier_matrices(n):
    """Dense first and second derivative matrices on n periodic nodes of [0,1)."""
    k = np.fft.fftfreq(n, d=1.0 / n)
    k1 = TWO_PI * 1j * k
    k1[n // 2] = 0.0  # odd derivative: drop the Nyquist mode
    k2 = -(TWO_PI * k) ** 2
    eye = np.eye(n)
    f = np.fft.fft(eye, axis=0)
    d1 = np.real(np.fft.ifft(k1[:, None] * f, axis=0))
    d2 = np.real(np.fft.ifft(k2[:, None] * f, axis=0))
    return d1, d2


def main():
    y = np.arange(N) / N
    y1, y2 = np.meshgrid(y, y, indexing="ij")
    s1, c1, s2 = np.sin(TWO_PI * y1), np.cos(TWO_PI * y1), np.sin(TWO_PI * y2)
    r = 1 + 0.25 * (c1 - 2 * s1) * s2
    a11 = ((1 - 0.5 * s1 * s2) / r).ravel()
    a22 = ((1 + 0.5 * s1 * s2) / r).ravel()

    d1, d2 = fourier_matrices(N)
    eye = np.eye(N)
    dx1, dx11, dx22 = np.kron(d1, eye), np.kron(d2, eye), np.kron(eye, d2)
    lap = a11[:, None] * dx11 + a22[:, None] * dx22

    # -A:D^2 w = g with node mean zero, as a bordered system.
    n2 = N * N
    big = np.zeros((n2 + 1, n2 + 1))
    big[:n2, :n2] = -lap
    big[:n2, n2] = 1.0
    big[n2, :n2] = 1.0

    def solve(g):
        return np.linalg.solve(big, np.append(g, 0.0))[:n2]

    abar11 = np.mean(r.ravel() * a11)
    v11 = solve(a11 - abar11)
    flux = a11 * (dx1 @ v11)
    c = np.mean(r.ravel() * flux)
    chi = solve(flux - c)
    print(f"# abar11 = {abar11:.15e}")
    print(f"# c1^11 = {c:.15e} (closed form {-1 / (128 * np.pi):.15e})")
    print(f"{N} scalar")
    for v in chi:
        print(f"{v:.16e}")


if __name__ == "__main__":
    main()

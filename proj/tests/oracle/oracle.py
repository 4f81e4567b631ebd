"""Independent dense NumPy/SciPy reference values frozen into the C++ tests.

Run:  python3 tests/oracle/oracle.py
Conventions: GHz in, energies 2*pi*GHz (rad/ns), frame at omega_d/2 for all
modes, H = sum (w - wd/2) n - (a/2) n(n-1) + g (a^+ b + h.c.)
          + (eps/2)(a^2 + a^+2) on the driven mode.
"""
import numpy as np
from scipy.linalg import expm, eigh

TWO_PI = 2 * np.pi


def lad(d):
    return np.diag(np.sqrt(np.arange(1, d)), 1)


def build(modes, couplings, wd, drives):
    dims = [m[0] for m in modes]
    n = int(np.prod(dims))

    def emb(k, op):
        out = np.eye(1)
        for j, d in enumerate(dims):
            out = np.kron(out, op if j == k else np.eye(d))
        return out

    A = [emb(k, lad(d)) for k, d in enumerate(dims)]
    H = np.zeros((n, n), complex)
    for k, (d, w, al) in enumerate(modes):
        N = A[k].T @ A[k]
        H += (w - wd / 2) * N - al / 2 * (A[k].T @ A[k].T @ A[k] @ A[k])
    for i, j, g in couplings:
        H += g * (A[i].T @ A[j] + A[j].T @ A[i])
    for k, eps in drives:
        H += eps / 2 * (A[k] @ A[k] + A[k].T @ A[k].T)
    return TWO_PI * H, dims


def label_energy(H, dims, labels):
    """Greedy: labels in descending best-overlap order, each eigenvector used once, lower index on ties."""
    E, V = eigh(H)
    P = np.abs(V) ** 2
    rows = {l: np.ravel_multi_index(tuple(int(c) for c in l), dims) for l in labels}
    out, used, todo = {}, set(), list(labels)
    while todo:
        best = None
        for l in todo:
            for k in range(len(E)):
                if k in used:
                    continue
                o = P[rows[l], k]
                if best is None or o > best[0] + 1e-9:
                    best = (o, l, k)
        o, l, k = best
        out[l] = (E[k], o)
        used.add(k)
        todo.remove(l)
    return out


def jzz2(eps, wd=10.60, g=0.03, dim=6):
    H, dims = build([(dim, 5.20, 0.25), (dim, 5.75, 0.25)], [(0, 1, g)], wd, [(1, eps)])
    e = label_energy(H, dims, ["00", "01", "10", "11"])
    return (e["11"][0] - e["10"][0] - e["01"][0] + e["00"][0]) / TWO_PI, e


def qcq(eps, wd, wc, dim=6):
    H, dims = build([(dim, 4.2, 0.2), (dim, wc, 0.8), (dim, 4.2, 0.2)], [(0, 1, 0.08), (1, 2, 0.08), (0, 2, 0.01)],
                    wd, [(1, eps)])
    e = label_energy(H, dims, ["000", "100", "001", "101"])
    jxx = (e["100"][0] - e["001"][0]) / 2 / TWO_PI
    jzz = (e["101"][0] - e["100"][0] - e["001"][0] + e["000"][0]) / TWO_PI
    return jxx, jzz


def root(f, lo, hi, tol=1e-10):
    flo = f(lo)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        fm = f(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return (lo + hi) / 2


def xxz(jxx, jzz, times, n=5):
    dim = 2 ** n
    sz = lambda b, i: -1.0 if (b >> (n - 1 - i)) & 1 else 1.0
    H = np.zeros((dim, dim))
    for b in range(dim):
        for i in range(n - 1):
            H[b, b] += jzz / 4 * sz(b, i) * sz(b, i + 1)
            if sz(b, i) != sz(b, i + 1):
                H[b ^ (1 << (n - 1 - i)) ^ (1 << (n - 2 - i)), b] += jxx
    H *= TWO_PI
    neel = sum(1 << (n - 1 - i) for i in range(0, n, 2))
    w = np.array([np.mean([(-1) ** (j - i) * sz(b, i) * sz(b, j) for i in range(n) for j in range(i + 1, n)])
                  for b in range(dim)])
    psi0 = np.zeros(dim, complex)
    psi0[neel] = 1
    return [float(np.abs(expm(-1j * H * t) @ psi0) ** 2 @ w) for t in times]


def main():
    p = lambda name, v: print(f"{name} = {v!r}")
    j0, e0 = jzz2(0.0)
    p("jzz_pair_eps0", j0)
    p("e10_minus_e00_eps0", (e0["10"][0] - e0["00"][0]) / TWO_PI)
    p("jzz_pair_eps0.03", jzz2(0.03)[0])
    p("eps0_numeric", root(lambda e: jzz2(e)[0], 0.005, 0.03))
    p("qcq_B_static", qcq(0.0, 5.0, 4.67))
    p("qcq_A_static", qcq(0.0, 5.0, 4.55))
    p("qcq_B_eps0.05_wd5.0", qcq(0.05, 5.0, 4.67))
    p("xxz_0.004_0.002_t10_20_40", xxz(0.004, 0.002, [10.0, 20.0, 40.0]))
    # single driven transmon, reference pair, qubit 2, eps = 0.05
    H, dims = build([(8, 5.75, 0.25)], [], 10.60, [(0, 0.05)])
    e = label_energy(H, dims, ["0", "1", "2", "4"])
    p("single_mode_levels_eps0.05", [e[l][0] / TWO_PI for l in ["0", "1", "2", "4"]])
    # dressed Neel at point B, eps = 0: segment projection overlaps
    seg = [(3, 4.2, 0.2), (5, 4.67, 0.8), (3, 4.2, 0.2), (5, 4.67, 0.8)]
    Hs, sd = build(seg, [(0, 1, 0.08), (1, 2, 0.08), (2, 3, 0.08), (0, 2, 0.01)], 5.6, [])
    E, V = eigh(Hs)
    vs = []
    for l in [(1, 0, 0, 0), (0, 0, 1, 0)]:
        i = np.ravel_multi_index(l, sd)
        vs.append(V[:, int(np.argmax(np.abs(V[i]) ** 2))])
    b = np.zeros(len(E))
    b[np.ravel_multi_index((1, 0, 0, 0), sd)] = 1
    v = sum(np.outer(x, x.conj()) for x in vs) @ b
    p("left_segment_projection_norm2", float(np.linalg.norm(v) ** 2))
    p("left_segment_bare_overlap", float(abs(v[np.ravel_multi_index((1, 0, 0, 0), sd)]) ** 2 / np.linalg.norm(v) ** 2))


if __name__ == "__main__":
    main()

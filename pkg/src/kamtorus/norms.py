"""Tame vector-field norms and exponentially weighted matrix norms.

The vector-field side majorises a Hamiltonian by its modulus coefficients
(|coeff| * e^{|k| rho} * mu^{|alpha|}), organises them by homogeneous mode
degree, and measures each layer through symmetrised multilinear forms over
weighted-l2 ellipsoids.  Degree-0/1 layers and bilinear layers are computed
exactly (vector norms / weighted SVD); higher layers use alternating
power-iteration sweeps with restarts and report the best witness, so those
values are certified lower estimates of the supremum.

The matrix side implements the 2x2-block norms of normal-mode quadratic
forms in real coordinates: the pi / (1-pi) splitting, exponential weights
e^{gamma |a -+ b|}, band truncations, and the Toeplitz-Lipschitz seminorm
with its probe-shift surrogate for the direction limits.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .poly import PhaseState, Polynomial

_C2 = np.array([[1.0, 1.0], [-1.0j, 1.0j]]) / math.sqrt(2.0)


@dataclass(frozen=True)
class DomainParams:
    """Analyticity widths: angle strip rho, action radius mu, mode radius
    sigma, and the Sobolev exponent p of the mode norm."""

    rho: float
    mu: float
    sigma: float
    p: float = 4.0

    def __post_init__(self):
        if min(self.rho, self.mu, self.sigma) <= 0:
            raise ConfigError("domain widths must be positive")
        if self.p < 1:
            raise ConfigError("mode norm exponent p must be >= 1")

    def shrunk(self, tau: float, tau_prime: float) -> "DomainParams":
        return DomainParams(self.rho - tau, (self.sigma - tau_prime) ** 2,
                            self.sigma - tau_prime, self.p)


def site_weights(sites, p: float) -> np.ndarray:
    """<a>^p = max(|a|, 1)^p per site."""
    arr = np.asarray(sites, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(len(sites), -1)
    norms = np.sqrt((arr * arr).sum(axis=1))
    return np.maximum(norms, 1.0) ** p


def mode_norm(cfg, u: np.ndarray, v: np.ndarray, p: float) -> float:
    """Weighted l2 norm of a normal-mode pair vector."""
    w = site_weights(cfg.normal, p)
    return math.sqrt(float((np.abs(u) ** 2 + np.abs(v) ** 2) @ (w * w)))


# ----------------------------------------------------------------------
# p-tame vector field norm
# ----------------------------------------------------------------------
def _modulus_entries(g: Polynomial, rho: float, mu_dom: float):
    """Entries (mode-multiset, weight) of the modulus majorant of g.

    The mode index space is the doubled normal list: index c for u_c,
    nL + c for v_c.  Returns {m: (sites_array (E, m), weights (E,))}.
    """
    nL = g.cfg.n_normal
    if g.n_terms == 0:
        return {}
    wts = np.abs(g.coeffs) * np.exp(g.fourier_sizes() * rho) \
        * (mu_dom ** g.alpha_part().sum(axis=1))
    mu = g.mu_part()
    nu = g.nu_part()
    by_degree = {}
    for i in range(g.n_terms):
        slots = []
        for c in np.nonzero(mu[i])[0]:
            slots.extend([int(c)] * int(mu[i, c]))
        for c in np.nonzero(nu[i])[0]:
            slots.extend([nL + int(c)] * int(nu[i, c]))
        by_degree.setdefault(len(slots), []).append((tuple(slots), wts[i]))
    out = {}
    for m, rows in by_degree.items():
        agg = {}
        for slots, w in rows:
            key = tuple(sorted(slots))
            agg[key] = agg.get(key, 0.0) + w
        sites = np.array([k for k in agg], dtype=int).reshape(len(agg), m)
        out[m] = (sites, np.array(list(agg.values())))
    return out


def _sym_eval(sites: np.ndarray, w: np.ndarray, xs) -> np.ndarray:
    """Per-entry value of the symmetrised form at the argument tuple."""
    m = sites.shape[1]
    if m == 0:
        return w.copy()
    acc = np.zeros(len(w))
    for perm in itertools.permutations(range(m)):
        prod = w.copy()
        for slot, pos in enumerate(perm):
            prod = prod * xs[slot][sites[:, pos]]
        acc += prod
    return acc / math.factorial(m)


def _sym_contract(arg_dim: int, sites: np.ndarray, w: np.ndarray, xs,
                  free_slot: int) -> np.ndarray:
    """Linear functional in the free slot, all other slots fixed at xs."""
    m = sites.shape[1]
    g = np.zeros(arg_dim)
    for perm in itertools.permutations(range(m)):
        prod = w / math.factorial(m)
        for slot, pos in enumerate(perm):
            if slot == free_slot:
                continue
            prod = prod * xs[slot][sites[:, pos]]
        np.add.at(g, sites[:, perm[free_slot]], prod)
    return g


def _sym_contract_matrix(out_dim: int, arg_dim: int, out_idx, sites, w, xs,
                         free_slot: int) -> np.ndarray:
    """Matrix (output x free argument) with the other slots fixed."""
    m = sites.shape[1]
    B = np.zeros((out_dim, arg_dim))
    for perm in itertools.permutations(range(m)):
        prod = w / math.factorial(m)
        for slot, pos in enumerate(perm):
            if slot == free_slot:
                continue
            prod = prod * xs[slot][sites[:, pos]]
        np.add.at(B, (out_idx, sites[:, perm[free_slot]]), prod)
    return B


def _scalar_layer_sup(sites, w, d1, restarts, rng) -> float:
    """sup of a scalar symmetrised form over weighted-l2 unit ellipsoids."""
    m = sites.shape[1]
    if m == 0:
        return float(w.sum())
    dim = len(d1)
    inv = 1.0 / d1
    if m == 1:
        g = np.zeros(dim)
        np.add.at(g, sites[:, 0], w)
        return float(np.linalg.norm(g * inv))
    best = 0.0
    starts = [np.ones(dim)] + [rng.random(dim) + 1e-3 for _ in range(restarts)]
    for x0 in starts:
        xs = []
        for _ in range(m):
            x = x0 / np.linalg.norm(d1 * x0)
            xs.append(x.copy())
        for _ in range(12):
            for j in range(m):
                g = _sym_contract(dim, sites, w, xs, j)
                nrm = np.linalg.norm(g * inv)
                if nrm == 0:
                    break
                xs[j] = (g * inv * inv) / nrm
            val = float(_sym_eval(sites, w, xs).sum())
            if val > best:
                best = val
    return best


def _vector_layer_sup(out_idx, sites, w, d_out, d_arg, restarts, rng):
    """sup of ||F(x_1..x_m)||_{d_out-weighted l2} over d_arg ellipsoids."""
    m = sites.shape[1]
    out_dim = len(d_out)
    if m == 0:
        y = np.zeros(out_dim)
        np.add.at(y, out_idx, w)
        return float(np.linalg.norm(y * d_out)), None
    dim = len(d_arg)
    inv = 1.0 / d_arg
    if m == 1:
        B = np.zeros((out_dim, dim))
        np.add.at(B, (out_idx, sites[:, 0]), w)
        M = (d_out[:, None] * B) * inv[None, :]
        return float(np.linalg.norm(M, 2)), None
    best = 0.0
    best_xs = None
    starts = [np.ones(dim)] + [rng.random(dim) + 1e-3 for _ in range(restarts)]
    for x0 in starts:
        xs = [x0 / np.linalg.norm(d_arg * x0) for _ in range(m)]
        xs = [x.copy() for x in xs]
        for _ in range(10):
            for j in range(m):
                B = _sym_contract_matrix(out_dim, dim, out_idx, sites, w,
                                         xs, j)
                M = (d_out[:, None] * B) * inv[None, :]
                try:
                    _, s, vt = np.linalg.svd(M)
                except np.linalg.LinAlgError:
                    break
                v = np.abs(vt[0])
                nv = np.linalg.norm(d_arg * v * inv * d_arg)  # placeholder
                x = v * inv
                x = x / np.linalg.norm(d_arg * x)
                xs[j] = x
            vals = _sym_eval(sites, w, xs)
            y = np.zeros(out_dim)
            np.add.at(y, out_idx, vals)
            val = float(np.linalg.norm(y * d_out))
            if val > best:
                best = val
                best_xs = [x.copy() for x in xs]
    return best, best_xs


def _mixed_ratio(out_idx, sites, w, d_out, d1, dp, xs, out_dim) -> float:
    """||F(x)||_p over the mixed (p,1) normaliser, x normalised in l2_1."""
    m = len(xs)
    xs_n = [x / np.linalg.norm(d1 * x) for x in xs]
    vals = _sym_eval(sites, w, xs_n)
    y = np.zeros(out_dim)
    np.add.at(y, out_idx, vals)
    num = float(np.linalg.norm(y * d_out))
    den = sum(np.linalg.norm(dp * x) for x in xs_n) / m
    return num / den if den > 0 else 0.0


def _z_entries(f: Polynomial, rho, mu_dom):
    """Modulus entries of the mode components of X_f, by derivative degree.

    Output index space is doubled: index c for df/du_c (the v-equation),
    nL + c for df/dv_c.  Returns {m: (out_idx, sites, weights)}.
    """
    nL = f.cfg.n_normal
    layers = {}
    for c in range(nL):
        for out, g in ((c, f.deriv_u(c)), (nL + c, f.deriv_v(c))):
            for m, (sites, w) in _modulus_entries(g, rho, mu_dom).items():
                layers.setdefault(m, []).append(
                    (np.full(len(w), out), sites, w))
    out = {}
    for m, rows in layers.items():
        out[m] = (np.concatenate([r[0] for r in rows]),
                  np.concatenate([r[1] for r in rows]).reshape(-1, m),
                  np.concatenate([r[2] for r in rows]))
    return out


def ptame_vfield_norm(f: Polynomial, dom: DomainParams, restarts: int = 20,
                      seed: int = 0, with_report: bool = False):
    """Layered tame norm of the Hamiltonian vector field of f.

    Sums, over homogeneous mode-degree layers, the action component, the
    angle component weighted by 1/mu, and the max of the p- and 1-weighted
    mode components weighted by 1/sigma, each with its sigma^h scaling.
    """
    cfg = f.cfg
    nA, nL = cfg.n_tangential, cfg.n_normal
    rng = np.random.default_rng(seed)
    doubled = list(cfg.normal) + list(cfg.normal)
    d1 = site_weights(doubled, 1.0) if nL else np.zeros(0)
    dp = site_weights(doubled, dom.p) if nL else np.zeros(0)

    report = {"r": {}, "phi": {}, "z": {}}
    total_r = 0.0
    total_phi = 0.0
    for name, deriv in (("r", f.deriv_r), ("phi", f.deriv_phi)):
        for a in range(nA):
            g = deriv(a)
            for m, (sites, w) in _modulus_entries(g, dom.rho, dom.mu).items():
                val = _scalar_layer_sup(sites, w, d1, restarts, rng)
                key = (a, m)
                report[name][key] = val
                cur = report[name].get(("layer", m), 0.0)
                report[name][("layer", m)] = max(cur, val)
    for m in sorted({k[1] for k in report["r"] if k[0] == "layer"}):
        total_r += report["r"][("layer", m)] * dom.sigma ** m
    for m in sorted({k[1] for k in report["phi"] if k[0] == "layer"}):
        total_phi += report["phi"][("layer", m)] * dom.sigma ** m

    total_z = 0.0
    if nL:
        for m, (out_idx, sites, w) in sorted(_z_entries(f, dom.rho,
                                                        dom.mu).items()):
            val1, xs1 = _vector_layer_sup(out_idx, sites, w, d1, d1,
                                          restarts, rng)
            if m <= 1:
                valp, _ = _vector_layer_sup(out_idx, sites, w, dp,
                                            dp, restarts, rng)
            else:
                valp = 0.0
                candidates = []
                if xs1 is not None:
                    candidates.append(xs1)
                _, xsp = _vector_layer_sup(out_idx, sites, w, dp, d1,
                                           restarts, rng)
                if xsp is not None:
                    candidates.append(xsp)
                candidates.append([np.ones(2 * nL) for _ in range(m)])
                for _ in range(restarts):
                    candidates.append([rng.random(2 * nL) + 1e-3
                                       for _ in range(m)])
                for xs in candidates:
                    valp = max(valp, _mixed_ratio(out_idx, sites, w, dp,
                                                  d1, dp, xs, 2 * nL))
            layer = max(valp, val1) * dom.sigma ** m
            report["z"][("layer", m, "p")] = valp
            report["z"][("layer", m, "1")] = val1
            total_z += layer

    total = total_r + total_phi / dom.mu + total_z / dom.sigma
    if with_report:
        report["totals"] = {"r": total_r, "phi": total_phi / dom.mu,
                            "z": total_z / dom.sigma, "norm": total}
        return total, report
    return total


def weighted_vfield_norm(f: Polynomial, dom: DomainParams,
                         n_samples: int = 200, seed: int = 0) -> float:
    """Empirical sup of the weighted vector-field norm over the domain.

    Boundary-biased sampling: most draws sit on |Im phi| = rho, |r| = mu,
    ||z||_p = sigma.  Always a lower bound of the sup, hence dominated by
    the tame norm.
    """
    cfg = f.cfg
    nA, nL = cfg.n_tangential, cfg.n_normal
    rng = np.random.default_rng(seed)
    derivs_r = [f.deriv_r(a) for a in range(nA)]
    derivs_phi = [f.deriv_phi(a) for a in range(nA)]
    derivs_u = [f.deriv_u(c) for c in range(nL)]
    derivs_v = [f.deriv_v(c) for c in range(nL)]
    wp = site_weights(cfg.normal, dom.p) if nL else np.zeros(0)

    best = 0.0
    for _ in range(n_samples):
        radial = 1.0 if rng.random() < 0.7 else rng.random()
        phi = rng.uniform(0, 2 * math.pi, nA) \
            + 1j * dom.rho * radial * rng.choice([-1.0, 1.0], nA)
        r = dom.mu * radial * np.exp(1j * rng.uniform(0, 2 * math.pi, nA))
        if nL:
            g = rng.normal(size=2 * nL) + 1j * rng.normal(size=2 * nL)
            zn = math.sqrt(float(
                (np.abs(g[:nL]) ** 2 + np.abs(g[nL:]) ** 2) @ (wp * wp)))
            g = g * (dom.sigma * radial / zn)
            u, v = g[:nL], g[nL:]
        else:
            u = v = np.zeros(0, dtype=complex)
        pt = PhaseState(phi=phi, r=r, u=u, v=v)
        fr = max((abs(p.evaluate(pt)) for p in derivs_r), default=0.0)
        fphi = max((abs(p.evaluate(pt)) for p in derivs_phi), default=0.0)
        if nL:
            gu = np.array([p.evaluate(pt) for p in derivs_u])
            gv = np.array([p.evaluate(pt) for p in derivs_v])
            fz = math.sqrt(float(
                (np.abs(gu) ** 2 + np.abs(gv) ** 2) @ (wp * wp)))
        else:
            fz = 0.0
        val = fr + fphi / dom.mu + fz / dom.sigma
        if val > best:
            best = val
    return best


def bracket_norm_check(f: Polynomial, g: Polynomial, dom: DomainParams,
                       tau: float, tau_prime: float, restarts: int = 20,
                       seed: int = 0) -> dict:
    """Both sides of the bracket tame estimate; reports the empirical C.

    The right-hand side lives on D(rho, sigma^2, sigma), the left on
    D(rho - tau, (sigma - tau')^2, sigma - tau'), with prefactor
    max(1/tau, sigma/tau').
    """
    from .poly import bracket as _bracket

    if not (0 < tau < dom.rho):
        raise ConfigError("need 0 < tau < rho")
    if not (0 < tau_prime < dom.sigma / 2):
        raise ConfigError("need 0 < tau_prime < sigma/2")
    dom_rhs = DomainParams(dom.rho, dom.sigma ** 2, dom.sigma, dom.p)
    dom_lhs = dom_rhs.shrunk(tau, tau_prime)
    nf = ptame_vfield_norm(f, dom_rhs, restarts=restarts, seed=seed)
    ng = ptame_vfield_norm(g, dom_rhs, restarts=restarts, seed=seed + 1)
    lhs = ptame_vfield_norm(_bracket(f, g), dom_lhs, restarts=restarts,
                            seed=seed + 2)
    factor = max(1.0 / tau, dom.sigma / tau_prime)
    denom = factor * nf * ng
    return {
        "lhs": lhs,
        "norm_f": nf,
        "norm_g": ng,
        "factor": factor,
        "c_empirical": lhs / denom if denom > 0 else 0.0,
    }


def report_to_text(report: dict, prefix: str = "") -> str:
    """Flatten a norm report into deterministic key = value lines."""
    lines = []
    for key in sorted(report, key=str):
        val = report[key]
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            lines.append(report_to_text(val, prefix=name + "."))
        else:
            lines.append(f"{name} = {val!r}")
    return "\n".join(lines)


# ----------------------------------------------------------------------
# 2x2-block matrices over the normal sites
# ----------------------------------------------------------------------
class LatticeMatrix:
    """Dense block matrix A: L x L -> gl(2, C) in real mode coordinates."""

    def __init__(self, sites, blocks: np.ndarray):
        self.sites = tuple(tuple(a) for a in sites)
        n = len(self.sites)
        blocks = np.asarray(blocks, dtype=complex)
        if blocks.shape != (n, n, 2, 2):
            raise ConfigError(f"expected block shape {(n, n, 2, 2)}")
        self.blocks = blocks
        arr = np.array(self.sites, dtype=float).reshape(n, -1)
        self._norms = np.sqrt((arr * arr).sum(axis=1))
        diff = arr[:, None, :] - arr[None, :, :]
        summ = arr[:, None, :] + arr[None, :, :]
        self._dist_minus = np.sqrt((diff * diff).sum(axis=2))
        self._dist_plus = np.sqrt((summ * summ).sum(axis=2))

    @classmethod
    def zeros(cls, sites) -> "LatticeMatrix":
        n = len(sites)
        return cls(sites, np.zeros((n, n, 2, 2), dtype=complex))

    @classmethod
    def from_sectors(cls, sites, S1, S2, S3) -> "LatticeMatrix":
        """Assemble from complex sector matrices (uu, uv, vv).

        The quadratic 1/2<u,S1 u> + <u,S2 v> + 1/2<v,S3 v> equals
        1/2<zeta, A zeta> in real coordinates with A returned here.
        """
        n = len(sites)
        S1 = np.zeros((n, n), dtype=complex) if S1 is None else np.asarray(S1, dtype=complex)
        S2 = np.zeros((n, n), dtype=complex) if S2 is None else np.asarray(S2, dtype=complex)
        S3 = np.zeros((n, n), dtype=complex) if S3 is None else np.asarray(S3, dtype=complex)
        M = np.empty((n, n, 2, 2), dtype=complex)
        M[:, :, 0, 0] = S1
        M[:, :, 0, 1] = S2
        M[:, :, 1, 0] = S2.T
        M[:, :, 1, 1] = S3
        A = np.einsum("ij,abjk,kl->abil", np.conjugate(_C2), M,
                      np.conjugate(_C2).T.conj().T @ np.eye(2))
        # conj(C) M C^dagger, written out to keep the einsum readable
        A = np.einsum("ij,abjk,kl->abil", np.conjugate(_C2), M,
                      np.conjugate(_C2.T))
        return cls(sites, A)

    def to_sectors(self):
        """Complex sector matrices (uu, uv, vv) of 1/2<zeta, A zeta>."""
        M = np.einsum("ij,abjk,kl->abil", _C2.T, self.blocks, _C2)
        return M[:, :, 0, 0], M[:, :, 0, 1], M[:, :, 1, 1]

    def pi_part(self) -> "LatticeMatrix":
        B = self.blocks
        out = np.zeros_like(B)
        tr = (B[:, :, 0, 0] + B[:, :, 1, 1]) / 2
        off = (B[:, :, 0, 1] - B[:, :, 1, 0]) / 2
        out[:, :, 0, 0] = tr
        out[:, :, 1, 1] = tr
        out[:, :, 0, 1] = off
        out[:, :, 1, 0] = -off
        return LatticeMatrix(self.sites, out)

    def anti_pi_part(self) -> "LatticeMatrix":
        return LatticeMatrix(self.sites, self.blocks - self.pi_part().blocks)

    def __add__(self, other: "LatticeMatrix") -> "LatticeMatrix":
        return LatticeMatrix(self.sites, self.blocks + other.blocks)

    def __sub__(self, other: "LatticeMatrix") -> "LatticeMatrix":
        return LatticeMatrix(self.sites, self.blocks - other.blocks)


def _block_opnorms(blocks: np.ndarray) -> np.ndarray:
    """Spectral norm of the entrywise modulus of each 2x2 block."""
    B = np.abs(blocks)
    fro2 = (B * B).sum(axis=(-2, -1))
    det = B[..., 0, 0] * B[..., 1, 1] - B[..., 0, 1] * B[..., 1, 0]
    disc = np.sqrt(np.maximum(fro2 * fro2 - 4 * det * det, 0.0))
    return np.sqrt(np.maximum((fro2 + disc) / 2, 0.0))


def matrix_gamma_norm(A: LatticeMatrix, gamma: float) -> float:
    """max of e^{gamma|a-b|}-weighted pi part and e^{gamma|a+b|}-weighted
    (1-pi) part, in block operator norms of entrywise moduli."""
    pi = A.pi_part().blocks
    anti = A.anti_pi_part().blocks
    plus = _block_opnorms(pi) * np.exp(gamma * A._dist_minus)
    minus = _block_opnorms(anti) * np.exp(gamma * A._dist_plus)
    vals = [plus.max() if plus.size else 0.0,
            minus.max() if minus.size else 0.0]
    return float(max(vals))


def band_truncate(A: LatticeMatrix, delta: float) -> LatticeMatrix:
    """Keep the pi part on |a-b| <= delta and the rest on |a+b| <= delta."""
    pi = A.pi_part().blocks.copy()
    anti = A.anti_pi_part().blocks.copy()
    pi[A._dist_minus > delta] = 0
    anti[A._dist_plus > delta] = 0
    return LatticeMatrix(A.sites, pi + anti)


def _lipschitz_directions(dim: int, bound: int):
    for c in itertools.product(range(-bound, bound + 1), repeat=dim):
        if any(c):
            yield c


def lipschitz_constant(A: LatticeMatrix, lam: float, gamma: float,
                       sector: str = "+", probe_shift: int = 3,
                       direction_bound: int = 2) -> dict:
    """Finite surrogate of the directional Lipschitz constant.

    The Toeplitz limit along direction c is replaced by the entry shifted
    probe_shift steps along c (zero if the shifted pair leaves the box).
    Reports the sup, the number of admissible domain pairs, and an
    'inconclusive' flag when no pair satisfies the domain inequalities.
    """
    if sector not in ("+", "-"):
        raise ConfigError("sector must be '+' or '-'")
    sgn = 1 if sector == "+" else -1
    sites = np.array(A.sites, dtype=float)
    dim = sites.shape[1]
    index = {a: i for i, a in enumerate(A.sites)}
    norms = A._norms
    best = 0.0
    n_points = 0
    for c in _lipschitz_directions(dim, direction_bound):
        cn = math.sqrt(sum(x * x for x in c))
        carr = np.array(c, dtype=float)
        # admissible sites: exists integer t in [0, probe_shift] with
        # |a| >= lam (|a - t c| + |c|) |c|, plus |a| >= 2 lam^2 |c|
        ok_site = np.zeros(len(A.sites), dtype=bool)
        for t in range(probe_shift + 1):
            shifted = sites - t * carr
            sn = np.sqrt((shifted * shifted).sum(axis=1))
            ok_site |= norms >= lam * (sn + cn) * cn
        ok_site &= norms >= 2 * lam * lam * cn
        if not ok_site.any():
            continue
        # surrogate limit: entries shifted probe_shift steps along c
        n = len(A.sites)
        limit = np.zeros_like(A.blocks)
        ci = tuple(int(x) for x in c)
        for i, a in enumerate(A.sites):
            a2 = tuple(a[k] + probe_shift * ci[k] for k in range(dim))
            i2 = index.get(a2)
            if i2 is None:
                continue
            for j, b in enumerate(A.sites):
                b2 = tuple(b[k] + sgn * probe_shift * ci[k]
                           for k in range(dim))
                j2 = index.get(b2)
                if j2 is not None:
                    limit[i, j] = A.blocks[i2, j2]
        diff = A.blocks - limit
        weight = (np.maximum(norms[:, None], norms[None, :]) / cn + 1.0)
        dist = A._dist_minus if sector == "+" else A._dist_plus
        vals = _block_opnorms(diff) * weight * np.exp(gamma * dist)
        if sector == "+":
            mask = ok_site[:, None] & ok_site[None, :]
        else:
            # (a, b) in D^- iff (a, -b) in D^+; admissibility of -b along c
            # equals admissibility of b along -c, with norms unchanged.
            ok_b = np.zeros(len(A.sites), dtype=bool)
            for t in range(probe_shift + 1):
                shifted = sites + t * carr
                sn = np.sqrt((shifted * shifted).sum(axis=1))
                ok_b |= norms >= lam * (sn + cn) * cn
            ok_b &= norms >= 2 * lam * lam * cn
            mask = ok_site[:, None] & ok_b[None, :]
        n_points += int(mask.sum())
        if mask.any():
            best = max(best, float(vals[mask].max()))
    return {"value": best, "n_points": n_points,
            "inconclusive": n_points == 0}


def toeplitz_lipschitz_norm(A: LatticeMatrix, lam: float, gamma: float,
                            probe_shift: int = 3,
                            direction_bound: int = 2) -> dict:
    """<A>_{Lambda,gamma}: max of the sector Lipschitz constants plus the
    gamma norm."""
    lip_plus = lipschitz_constant(A.pi_part(), lam, gamma, "+",
                                  probe_shift, direction_bound)
    lip_minus = lipschitz_constant(A.anti_pi_part(), lam, gamma, "-",
                                   probe_shift, direction_bound)
    base = matrix_gamma_norm(A, gamma)
    return {
        "value": max(lip_plus["value"], lip_minus["value"]) + base,
        "gamma_norm": base,
        "lip_plus": lip_plus,
        "lip_minus": lip_minus,
        "inconclusive": lip_plus["inconclusive"] and lip_minus["inconclusive"],
    }

"""Sparse Poisson algebra over mixed action-angle / normal-mode coordinates.

A monomial is

    c * exp(i<k, phi>) * r^alpha * u^mu * v^nu

with k in Z^A (Fourier index over the tangential angles), alpha in N^A
(action exponents) and mu, nu in N^L (complex normal-mode exponents).  The
weighted degree is 2|alpha| + |mu| + |nu| and the momentum of a monomial is

    -sum_A k_a * a + sum_L (mu_a - nu_a) * a,

an exact integer vector.  The Poisson bracket of the symplectic structure is

    {f, g} = sum_A (f_phi g_r - f_r g_phi) - i * sum_L (f_u g_v - f_v g_u),

which reproduces the real-coordinate bracket once u = (xi + i eta)/sqrt(2),
v = (xi - i eta)/sqrt(2) and the angles are oriented so that the flow of
omega*r is u ~ exp(-i omega t) on tangential sites.

Terms are stored as an integer key matrix plus a complex coefficient vector,
kept aggregated, pruned and lexicographically sorted, so all algebra is
vectorised and results are deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegreeOverflow, LieSeriesDiverged
from .lattice import LatticeConfig

PRUNE_TOL = 1e-14
TERM_BUDGET = 5_000_000
_CHUNK = 1 << 19


@dataclass
class PhaseState:
    """A phase-space point: angles/actions on A, complex modes on L."""

    phi: np.ndarray
    r: np.ndarray
    u: np.ndarray
    v: np.ndarray

    @classmethod
    def zeros(cls, cfg: LatticeConfig) -> "PhaseState":
        return cls(
            phi=np.zeros(cfg.n_tangential),
            r=np.zeros(cfg.n_tangential, dtype=complex),
            u=np.zeros(cfg.n_normal, dtype=complex),
            v=np.zeros(cfg.n_normal, dtype=complex),
        )

    def copy(self) -> "PhaseState":
        return PhaseState(
            self.phi.copy(), self.r.copy(), self.u.copy(), self.v.copy()
        )


def _aggregate(keys: np.ndarray, coeffs: np.ndarray, tol: float):
    """Sum duplicate keys, drop near-zero coefficients, sort rows."""
    if keys.shape[0] == 0:
        return keys, coeffs
    order = np.lexsort(keys.T[::-1])
    sk = keys[order]
    sc = coeffs[order]
    if sk.shape[0] > 1:
        new = np.any(sk[1:] != sk[:-1], axis=1)
        starts = np.concatenate(([0], np.nonzero(new)[0] + 1))
    else:
        starts = np.array([0])
    sums = np.add.reduceat(sc, starts)
    uk = sk[starts]
    keep = np.abs(sums) > tol
    return np.ascontiguousarray(uk[keep]), sums[keep]


class Polynomial:
    """Finite Poisson series over a truncated lattice."""

    __slots__ = ("cfg", "keys", "coeffs", "_col")

    def __init__(self, cfg: LatticeConfig, keys: np.ndarray, coeffs: np.ndarray,
                 *, _canonical: bool = False):
        self.cfg = cfg
        nA, nL = cfg.n_tangential, cfg.n_normal
        width = 2 * nA + 2 * nL
        keys = np.asarray(keys, dtype=np.int16).reshape(-1, width)
        coeffs = np.asarray(coeffs, dtype=complex).reshape(-1)
        if keys.shape[0] != coeffs.shape[0]:
            raise ConfigError("keys/coeffs length mismatch")
        if not _canonical:
            keys, coeffs = _aggregate(keys, coeffs, PRUNE_TOL)
        self.keys = keys
        self.coeffs = coeffs
        self._col = (0, nA, 2 * nA, 2 * nA + nL, width)

    # ------------------------------------------------------------------
    # constructors
    # ------------------------------------------------------------------
    @classmethod
    def zero(cls, cfg: LatticeConfig) -> "Polynomial":
        width = 2 * cfg.n_tangential + 2 * cfg.n_normal
        return cls(cfg, np.zeros((0, width), dtype=np.int16),
                   np.zeros(0, dtype=complex), _canonical=True)

    @classmethod
    def constant(cls, cfg: LatticeConfig, value: complex) -> "Polynomial":
        width = 2 * cfg.n_tangential + 2 * cfg.n_normal
        return cls(cfg, np.zeros((1, width), dtype=np.int16),
                   np.array([value], dtype=complex))

    @classmethod
    def from_terms(cls, cfg: LatticeConfig, terms) -> "Polynomial":
        """Build from [(k, alpha, mu, nu, coeff)] with sparse dict entries.

        k and alpha are dicts keyed by tangential sites, mu and nu by normal
        sites; missing entries are zero.
        """
        nA, nL = cfg.n_tangential, cfg.n_normal
        width = 2 * nA + 2 * nL
        ta_index = {a: i for i, a in enumerate(cfg.tangential)}
        no_index = {a: i for i, a in enumerate(cfg.normal)}
        rows = []
        coeffs = []
        for k, alpha, mu, nu, c in terms:
            row = np.zeros(width, dtype=np.int16)
            for a, x in (k or {}).items():
                row[ta_index[tuple(a)]] = x
            for a, x in (alpha or {}).items():
                if x < 0:
                    raise ConfigError("action exponents must be >= 0")
                row[nA + ta_index[tuple(a)]] = x
            for a, x in (mu or {}).items():
                if x < 0:
                    raise ConfigError("mode exponents must be >= 0")
                row[2 * nA + no_index[tuple(a)]] = x
            for a, x in (nu or {}).items():
                if x < 0:
                    raise ConfigError("mode exponents must be >= 0")
                row[2 * nA + nL + no_index[tuple(a)]] = x
            rows.append(row)
            coeffs.append(c)
        if not rows:
            return cls.zero(cfg)
        return cls(cfg, np.array(rows), np.array(coeffs, dtype=complex))

    # ------------------------------------------------------------------
    # views
    # ------------------------------------------------------------------
    @property
    def n_terms(self) -> int:
        return self.keys.shape[0]

    def k_part(self) -> np.ndarray:
        return self.keys[:, self._col[0]:self._col[1]]

    def alpha_part(self) -> np.ndarray:
        return self.keys[:, self._col[1]:self._col[2]]

    def mu_part(self) -> np.ndarray:
        return self.keys[:, self._col[2]:self._col[3]]

    def nu_part(self) -> np.ndarray:
        return self.keys[:, self._col[3]:self._col[4]]

    def weighted_degrees(self) -> np.ndarray:
        """2|alpha| + |mu| + |nu| per term."""
        return (2 * self.alpha_part().sum(axis=1)
                + self.mu_part().sum(axis=1)
                + self.nu_part().sum(axis=1)).astype(int)

    def fourier_sizes(self) -> np.ndarray:
        """|k|_1 per term."""
        return np.abs(self.k_part()).sum(axis=1).astype(int)

    def momentum(self) -> np.ndarray:
        """Exact integer momentum vector per term (n_terms x dim)."""
        A = np.array(self.cfg.tangential, dtype=np.int64).reshape(
            self.cfg.n_tangential, self.cfg.dim)
        L = np.array(self.cfg.normal, dtype=np.int64).reshape(
            self.cfg.n_normal, self.cfg.dim)
        k = self.k_part().astype(np.int64)
        dmu = (self.mu_part().astype(np.int64)
               - self.nu_part().astype(np.int64))
        return -k @ A + dmu @ L

    def terms(self):
        """Iterate (k_dict, alpha_dict, mu_dict, nu_dict, coeff)."""
        nA = self.cfg.n_tangential
        nL = self.cfg.n_normal
        for i in range(self.n_terms):
            row = self.keys[i]
            k = {self.cfg.tangential[j]: int(row[j])
                 for j in range(nA) if row[j]}
            al = {self.cfg.tangential[j]: int(row[nA + j])
                  for j in range(nA) if row[nA + j]}
            mu = {self.cfg.normal[j]: int(row[2 * nA + j])
                  for j in range(nL) if row[2 * nA + j]}
            nu = {self.cfg.normal[j]: int(row[2 * nA + nL + j])
                  for j in range(nL) if row[2 * nA + nL + j]}
            yield k, al, mu, nu, self.coeffs[i]

    def max_abs_coeff(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.n_terms else 0.0

    def coeff_l1(self) -> float:
        return float(np.sum(np.abs(self.coeffs))) if self.n_terms else 0.0

    # ------------------------------------------------------------------
    # ring operations
    # ------------------------------------------------------------------
    def copy(self) -> "Polynomial":
        return Polynomial(self.cfg, self.keys.copy(), self.coeffs.copy(),
                          _canonical=True)

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check_compatible(other)
        return Polynomial(self.cfg,
                          np.concatenate([self.keys, other.keys]),
                          np.concatenate([self.coeffs, other.coeffs]))

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (other * -1.0)

    def __mul__(self, scalar) -> "Polynomial":
        return Polynomial(self.cfg, self.keys.copy(), self.coeffs * scalar,
                          _canonical=False)

    __rmul__ = __mul__

    def __neg__(self) -> "Polynomial":
        return self * -1.0

    def _check_compatible(self, other: "Polynomial"):
        if other.cfg is not self.cfg and other.cfg != self.cfg:
            raise ConfigError("polynomials live on different lattices")

    def select(self, mask: np.ndarray) -> "Polynomial":
        return Polynomial(self.cfg, self.keys[mask], self.coeffs[mask],
                          _canonical=True)

    def prune(self, tol: float = PRUNE_TOL) -> "Polynomial":
        return self.select(np.abs(self.coeffs) > tol)

    def truncate_degree(self, degree_cap: int) -> "Polynomial":
        return self.select(self.weighted_degrees() <= degree_cap)

    def poly_mul(self, other: "Polynomial", degree_cap=None,
                 term_budget: int = TERM_BUDGET) -> "Polynomial":
        """Product of two series, optionally capped in weighted degree."""
        self._check_compatible(other)
        if self.n_terms == 0 or other.n_terms == 0:
            return Polynomial.zero(self.cfg)
        return _pair_product(self.cfg, self.keys, self.coeffs,
                             other.keys, other.coeffs, degree_cap, term_budget)

    # ------------------------------------------------------------------
    # calculus
    # ------------------------------------------------------------------
    def _deriv_phi(self, i: int):
        k = self.keys[:, i]
        mask = k != 0
        return self.keys[mask], self.coeffs[mask] * (1j * k[mask])

    def _deriv_exponent(self, col: int):
        e = self.keys[:, col]
        mask = e != 0
        keys = self.keys[mask].copy()
        keys[:, col] -= 1
        return keys, self.coeffs[mask] * e[mask]

    def deriv_r(self, i: int) -> "Polynomial":
        keys, coeffs = self._deriv_exponent(self._col[1] + i)
        return Polynomial(self.cfg, keys, coeffs, _canonical=False)

    def deriv_phi(self, i: int) -> "Polynomial":
        keys, coeffs = self._deriv_phi(i)
        return Polynomial(self.cfg, keys, coeffs, _canonical=False)

    def deriv_u(self, c: int) -> "Polynomial":
        keys, coeffs = self._deriv_exponent(self._col[2] + c)
        return Polynomial(self.cfg, keys, coeffs, _canonical=False)

    def deriv_v(self, c: int) -> "Polynomial":
        keys, coeffs = self._deriv_exponent(self._col[3] + c)
        return Polynomial(self.cfg, keys, coeffs, _canonical=False)

    # ------------------------------------------------------------------
    # reality involution
    # ------------------------------------------------------------------
    def conjugate_poly(self) -> "Polynomial":
        """Image of f under complex conjugation of the phase-space point.

        k -> -k, mu <-> nu, coefficients conjugated.  f is real-valued on
        real states iff conjugate_poly() == f.
        """
        c0, c1, c2, c3, c4 = self._col
        keys = self.keys.copy()
        keys[:, c0:c1] = -self.keys[:, c0:c1]
        keys[:, c2:c3] = self.keys[:, c3:c4]
        keys[:, c3:c4] = self.keys[:, c2:c3]
        return Polynomial(self.cfg, keys, np.conjugate(self.coeffs))

    def reality_defect(self) -> float:
        """Max coefficient of f - conj(f); 0 for real-valued series."""
        return (self - self.conjugate_poly()).max_abs_coeff()

    # ------------------------------------------------------------------
    # jets and truncations
    # ------------------------------------------------------------------
    def low_jet(self) -> "Polynomial":
        """Terms of weighted degree <= 2 (angle, action-linear, 1- and
        2-mode classes)."""
        return self.select(self.weighted_degrees() <= 2)

    def high_part(self) -> "Polynomial":
        return self.select(self.weighted_degrees() >= 3)

    def jet_classes(self) -> dict:
        """Split the low jet into its four classes.

        'phi': no actions, no modes; 'r': action-linear; 'z1': one mode
        factor; 'z2': two mode factors.
        """
        asum = self.alpha_part().sum(axis=1)
        hsum = self.mu_part().sum(axis=1) + self.nu_part().sum(axis=1)
        out = {
            "phi": self.select((asum == 0) & (hsum == 0)),
            "r": self.select((asum == 1) & (hsum == 0)),
            "z1": self.select((asum == 0) & (hsum == 1)),
            "z2": self.select((asum == 0) & (hsum == 2)),
        }
        return out

    def truncate_fourier(self, delta_prime: float,
                         band_quadratic: bool = True) -> "Polynomial":
        """Keep |k|_1 <= delta_prime; optionally band-limit the 2-mode class.

        The 2-mode band rule follows the matrix truncation: mixed u_a v_b
        entries survive when |a - b| <= delta_prime, u_a u_b and v_a v_b
        entries when |a + b| <= delta_prime.
        """
        keep = self.fourier_sizes() <= delta_prime
        if band_quadratic and self.n_terms:
            mu = self.mu_part()
            nu = self.nu_part()
            msum = mu.sum(axis=1)
            nsum = nu.sum(axis=1)
            quad = (self.alpha_part().sum(axis=1) == 0) & (msum + nsum == 2)
            if np.any(quad):
                L = np.array(self.cfg.normal, dtype=float)
                d2 = delta_prime * delta_prime
                idx = np.nonzero(quad)[0]
                for i in idx:
                    sites = []
                    for j in np.nonzero(mu[i])[0]:
                        sites.extend([(L[j], +1)] * int(mu[i, j]))
                    for j in np.nonzero(nu[i])[0]:
                        sites.extend([(L[j], -1)] * int(nu[i, j]))
                    (sa, ea), (sb, eb) = sites
                    vec = sa - sb if ea != eb else sa + sb
                    if float(vec @ vec) > d2 + 1e-9:
                        keep[i] = False
        return self.select(keep)

    # ------------------------------------------------------------------
    # evaluation
    # ------------------------------------------------------------------
    def evaluate(self, state: PhaseState) -> complex:
        if self.n_terms == 0:
            return 0j
        c0, c1, c2, c3, c4 = self._col
        k = self.keys[:, c0:c1]
        phase = np.exp(1j * (k @ np.asarray(state.phi, dtype=complex)))
        vals = self.coeffs * phase
        for block, var in ((self.keys[:, c1:c2], np.asarray(state.r, dtype=complex)),
                           (self.keys[:, c2:c3], np.asarray(state.u, dtype=complex)),
                           (self.keys[:, c3:c4], np.asarray(state.v, dtype=complex))):
            if block.shape[1]:
                vals = vals * np.prod(var[None, :] ** block, axis=1)
        return complex(vals.sum())

    def vector_field_eval(self, state: PhaseState):
        """Hamiltonian vector field at a point.

        Returns (dphi, dr, du, dv) with dphi = f_r, dr = -f_phi,
        du = -i f_v, dv = +i f_u (the flow conventions of the bracket).
        """
        nA, nL = self.cfg.n_tangential, self.cfg.n_normal
        dphi = np.zeros(nA, dtype=complex)
        dr = np.zeros(nA, dtype=complex)
        du = np.zeros(nL, dtype=complex)
        dv = np.zeros(nL, dtype=complex)
        for i in range(nA):
            dphi[i] = self.deriv_r(i).evaluate(state)
            dr[i] = -self.deriv_phi(i).evaluate(state)
        for c in range(nL):
            du[c] = -1j * self.deriv_v(c).evaluate(state)
            dv[c] = 1j * self.deriv_u(c).evaluate(state)
        return dphi, dr, du, dv

    # ------------------------------------------------------------------
    # serialization
    # ------------------------------------------------------------------
    def to_jsonl(self) -> str:
        lines = [json.dumps({"lattice": json.loads(self.cfg.to_json()),
                             "n_terms": self.n_terms}, sort_keys=True)]
        for k, al, mu, nu, c in self.terms():
            lines.append(json.dumps({
                "k": sorted([list(a) + [x] for a, x in k.items()]),
                "alpha": sorted([list(a) + [x] for a, x in al.items()]),
                "mu": sorted([list(a) + [x] for a, x in mu.items()]),
                "nu": sorted([list(a) + [x] for a, x in nu.items()]),
                "re": c.real, "im": c.imag,
            }, sort_keys=True))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "Polynomial":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = json.loads(lines[0])
        cfg = LatticeConfig.from_json(json.dumps(head["lattice"]))
        terms = []
        for ln in lines[1:]:
            d = json.loads(ln)
            unpack = lambda entries: {tuple(e[:-1]): e[-1] for e in entries}
            terms.append((unpack(d["k"]), unpack(d["alpha"]),
                          unpack(d["mu"]), unpack(d["nu"]),
                          complex(d["re"], d["im"])))
        return cls.from_terms(cfg, terms)


def _pair_product(cfg, keysA, coeffsA, keysB, coeffsB, degree_cap, term_budget):
    """All pairwise key sums / coefficient products, chunked and aggregated."""
    nA_rows = keysA.shape[0]
    nB_rows = keysB.shape[0]
    if nA_rows == 0 or nB_rows == 0:
        return Polynomial.zero(cfg)
    out_keys = []
    out_coeffs = []
    rows_per_chunk = max(1, _CHUNK // max(nA_rows, 1))
    total = 0
    for start in range(0, nB_rows, rows_per_chunk):
        kb = keysB[start:start + rows_per_chunk]
        cb = coeffsB[start:start + rows_per_chunk]
        K = (keysA[:, None, :] + kb[None, :, :]).reshape(-1, keysA.shape[1])
        C = (coeffsA[:, None] * cb[None, :]).reshape(-1)
        total += K.shape[0]
        if total > term_budget:
            raise DegreeOverflow(
                f"product exceeded term budget ({term_budget})")
        out_keys.append(K)
        out_coeffs.append(C)
    keys = np.concatenate(out_keys)
    coeffs = np.concatenate(out_coeffs)
    poly = Polynomial(cfg, keys, coeffs)
    if degree_cap is not None:
        poly = poly.truncate_degree(degree_cap)
    return poly


def bracket(f: Polynomial, g: Polynomial, degree_cap=None,
            term_budget: int = TERM_BUDGET) -> Polynomial:
    """Poisson bracket {f, g}.

    Tangential channels contribute f_phi g_r - f_r g_phi per site, normal
    channels -i (f_u g_v - f_v g_u).  Gradings: weighted degrees add and
    drop by 2, momenta add exactly.
    """
    f._check_compatible(g)
    cfg = f.cfg
    nA, nL = cfg.n_tangential, cfg.n_normal
    pieces_k = []
    pieces_c = []

    def accum(keys1, co1, keys2, co2, factor):
        if keys1.shape[0] == 0 or keys2.shape[0] == 0:
            return
        prod = _pair_product(cfg, keys1, co1, keys2, co2, degree_cap,
                             term_budget)
        if prod.n_terms:
            pieces_k.append(prod.keys)
            pieces_c.append(prod.coeffs * factor)

    for i in range(nA):
        fph, cph = f._deriv_phi(i)
        fr, cr = f._deriv_exponent(f._col[1] + i)
        gph, dph = g._deriv_phi(i)
        gr, dr = g._deriv_exponent(g._col[1] + i)
        accum(fph, cph, gr, dr, 1.0)
        accum(fr, cr, gph, dph, -1.0)
    for c in range(nL):
        fu, cu = f._deriv_exponent(f._col[2] + c)
        fv, cv = f._deriv_exponent(f._col[3] + c)
        gu, du_ = g._deriv_exponent(g._col[2] + c)
        gv, dv_ = g._deriv_exponent(g._col[3] + c)
        accum(fu, cu, gv, dv_, -1j)
        accum(fv, cv, gu, du_, 1j)

    if not pieces_k:
        return Polynomial.zero(cfg)
    out = Polynomial(cfg, np.concatenate(pieces_k), np.concatenate(pieces_c))
    if degree_cap is not None:
        out = out.truncate_degree(degree_cap)
    return out


def lie_transform_with_certificate(f: Polynomial, s: Polynomial,
                                   order_cap: int = 12,
                                   degree_cap=None,
                                   term_budget: int = TERM_BUDGET):
    """Push f through the time-1 flow of s: sum_j ad_s^j f / j!.

    ad_s f = {f, s}.  Stops when the running term prunes to zero or the
    order cap is reached; returns (transformed, tail) where tail is the max
    coefficient magnitude of the first term not included.
    """
    out = f.copy()
    term = f
    tail = 0.0
    for j in range(1, order_cap + 1):
        term = bracket(term, s, degree_cap=degree_cap,
                       term_budget=term_budget) * (1.0 / j)
        if term.n_terms == 0:
            return out, 0.0
        out = out + term
    tail_term = bracket(term, s, degree_cap=degree_cap,
                        term_budget=term_budget) * (1.0 / (order_cap + 1))
    tail = tail_term.max_abs_coeff()
    return out, tail


def lie_transform(f: Polynomial, s: Polynomial, order_cap: int = 12,
                  degree_cap=None, tail_tol=None,
                  term_budget: int = TERM_BUDGET) -> Polynomial:
    """Time-1 Lie transform of f along s; raises if the tail is too large."""
    out, tail = lie_transform_with_certificate(
        f, s, order_cap=order_cap, degree_cap=degree_cap,
        term_budget=term_budget)
    if tail_tol is not None and tail > tail_tol:
        raise LieSeriesDiverged(
            f"Lie series tail {tail:.3e} exceeds tolerance {tail_tol:.3e}",
            tail=tail)
    return out


def poly_allclose(f: Polynomial, g: Polynomial, tol: float = 1e-12) -> bool:
    return (f - g).max_abs_coeff() <= tol


# ----------------------------------------------------------------------
# linear / quadratic extraction used by the homological solvers
# ----------------------------------------------------------------------
def z_linear_vectors(f: Polynomial) -> dict:
    """Fourier-resolved coefficients of the 1-mode class.

    Returns {k_tuple: (Fu, Fv)} with Fu[c] the coefficient of
    exp(i<k,phi>) u_c and Fv[c] of exp(i<k,phi>) v_c.
    """
    cfg = f.cfg
    nA, nL = cfg.n_tangential, cfg.n_normal
    out = {}
    ks = f.k_part()
    mu = f.mu_part()
    nu = f.nu_part()
    for i in range(f.n_terms):
        k = tuple(int(x) for x in ks[i])
        if k not in out:
            out[k] = (np.zeros(nL, dtype=complex), np.zeros(nL, dtype=complex))
        mrow = mu[i]
        nrow = nu[i]
        if mrow.sum() == 1:
            out[k][0][int(np.nonzero(mrow)[0][0])] += f.coeffs[i]
        elif nrow.sum() == 1:
            out[k][1][int(np.nonzero(nrow)[0][0])] += f.coeffs[i]
        else:
            raise ConfigError("z_linear_vectors expects the 1-mode class")
    return out


def z_quadratic_matrices(f: Polynomial) -> dict:
    """Fourier-resolved sector matrices of the 2-mode class.

    Returns {k: (F1, F2, F3)} with the convention

        f_k = 1/2 <u, F1 u> + <u, F2 v> + 1/2 <v, F3 v>,

    F1 and F3 symmetric, F2 the full mixed sector.
    """
    cfg = f.cfg
    nL = cfg.n_normal
    out = {}
    ks = f.k_part()
    mu = f.mu_part()
    nu = f.nu_part()
    for i in range(f.n_terms):
        k = tuple(int(x) for x in ks[i])
        if k not in out:
            out[k] = (np.zeros((nL, nL), dtype=complex),
                      np.zeros((nL, nL), dtype=complex),
                      np.zeros((nL, nL), dtype=complex))
        F1, F2, F3 = out[k]
        c = f.coeffs[i]
        ms = int(mu[i].sum())
        ns = int(nu[i].sum())
        if ms == 2 and ns == 0:
            idx = np.nonzero(mu[i])[0]
            if len(idx) == 1:
                a = int(idx[0])
                F1[a, a] += 2 * c
            else:
                a, b = int(idx[0]), int(idx[1])
                F1[a, b] += c
                F1[b, a] += c
        elif ms == 0 and ns == 2:
            idx = np.nonzero(nu[i])[0]
            if len(idx) == 1:
                a = int(idx[0])
                F3[a, a] += 2 * c
            else:
                a, b = int(idx[0]), int(idx[1])
                F3[a, b] += c
                F3[b, a] += c
        elif ms == 1 and ns == 1:
            a = int(np.nonzero(mu[i])[0][0])
            b = int(np.nonzero(nu[i])[0][0])
            F2[a, b] += c
        else:
            raise ConfigError("z_quadratic_matrices expects the 2-mode class")
    return out


def poly_from_z_linear(cfg: LatticeConfig, k, Fu, Fv) -> Polynomial:
    nA, nL = cfg.n_tangential, cfg.n_normal
    width = 2 * nA + 2 * nL
    rows = []
    coeffs = []
    kk = np.asarray(k, dtype=np.int16)
    for c in range(nL):
        if Fu is not None and Fu[c] != 0:
            row = np.zeros(width, dtype=np.int16)
            row[:nA] = kk
            row[2 * nA + c] = 1
            rows.append(row)
            coeffs.append(Fu[c])
        if Fv is not None and Fv[c] != 0:
            row = np.zeros(width, dtype=np.int16)
            row[:nA] = kk
            row[2 * nA + nL + c] = 1
            rows.append(row)
            coeffs.append(Fv[c])
    if not rows:
        return Polynomial.zero(cfg)
    return Polynomial(cfg, np.array(rows), np.array(coeffs, dtype=complex))


def poly_from_z_quadratic(cfg: LatticeConfig, k, F1, F2, F3) -> Polynomial:
    """Inverse of z_quadratic_matrices for one Fourier index."""
    nA, nL = cfg.n_tangential, cfg.n_normal
    width = 2 * nA + 2 * nL
    rows = []
    coeffs = []
    kk = np.asarray(k, dtype=np.int16)

    def push(row, c):
        if c != 0:
            rows.append(row)
            coeffs.append(c)

    if F1 is not None:
        for a in range(nL):
            for b in range(a, nL):
                row = np.zeros(width, dtype=np.int16)
                row[:nA] = kk
                row[2 * nA + a] += 1
                row[2 * nA + b] += 1
                c = F1[a, a] / 2 if a == b else (F1[a, b] + F1[b, a]) / 2
                push(row, c)
    if F3 is not None:
        for a in range(nL):
            for b in range(a, nL):
                row = np.zeros(width, dtype=np.int16)
                row[:nA] = kk
                row[2 * nA + nL + a] += 1
                row[2 * nA + nL + b] += 1
                c = F3[a, a] / 2 if a == b else (F3[a, b] + F3[b, a]) / 2
                push(row, c)
    if F2 is not None:
        for a in range(nL):
            for b in range(nL):
                if F2[a, b] != 0:
                    row = np.zeros(width, dtype=np.int16)
                    row[:nA] = kk
                    row[2 * nA + a] += 1
                    row[2 * nA + nL + b] += 1
                    push(row, F2[a, b])
    if not rows:
        return Polynomial.zero(cfg)
    return Polynomial(cfg, np.array(rows), np.array(coeffs, dtype=complex))


def phi_class_coeffs(f: Polynomial) -> dict:
    """{k: coeff} for the pure-angle class."""
    out = {}
    ks = f.k_part()
    for i in range(f.n_terms):
        k = tuple(int(x) for x in ks[i])
        out[k] = out.get(k, 0j) + f.coeffs[i]
    return out


def r_class_coeffs(f: Polynomial) -> dict:
    """{k: vector over tangential sites} for the action-linear class."""
    cfg = f.cfg
    nA = cfg.n_tangential
    out = {}
    ks = f.k_part()
    al = f.alpha_part()
    for i in range(f.n_terms):
        k = tuple(int(x) for x in ks[i])
        if k not in out:
            out[k] = np.zeros(nA, dtype=complex)
        out[k][int(np.nonzero(al[i])[0][0])] += f.coeffs[i]
    return out


def poly_from_phi_class(cfg: LatticeConfig, coeffs_by_k: dict) -> Polynomial:
    nA, nL = cfg.n_tangential, cfg.n_normal
    width = 2 * nA + 2 * nL
    rows = []
    cs = []
    for k, c in coeffs_by_k.items():
        if c == 0:
            continue
        row = np.zeros(width, dtype=np.int16)
        row[:nA] = np.asarray(k, dtype=np.int16)
        rows.append(row)
        cs.append(c)
    if not rows:
        return Polynomial.zero(cfg)
    return Polynomial(cfg, np.array(rows), np.array(cs, dtype=complex))


def poly_from_r_class(cfg: LatticeConfig, vectors_by_k: dict) -> Polynomial:
    nA, nL = cfg.n_tangential, cfg.n_normal
    width = 2 * nA + 2 * nL
    rows = []
    cs = []
    for k, vec in vectors_by_k.items():
        for i in range(nA):
            if vec[i] != 0:
                row = np.zeros(width, dtype=np.int16)
                row[:nA] = np.asarray(k, dtype=np.int16)
                row[nA + i] = 1
                rows.append(row)
                cs.append(vec[i])
    if not rows:
        return Polynomial.zero(cfg)
    return Polynomial(cfg, np.array(rows), np.array(cs, dtype=complex))


def substitute_linear_normal(f: Polynomial, site_indices, W: np.ndarray) -> Polynomial:
    """Apply u_B -> conj(W) u'_B, v_B -> W v'_B on the listed normal modes.

    W is the unitary that diagonalises the restricted quadratic sector; the
    pairing <u, Q v> with Q = W diag W^H becomes sum_c lambda_c u'_c v'_c.
    Identity W short-circuits.
    """
    m = len(site_indices)
    if m == 0 or np.allclose(W, np.eye(m), atol=1e-15):
        return f.copy()
    cfg = f.cfg
    nA, nL = cfg.n_tangential, cfg.n_normal
    Wu = np.conjugate(W)  # u_a = sum_c Wu[a,c] u'_c
    Wv = W                # v_a = sum_c Wv[a,c] v'_c
    loc = {int(s): j for j, s in enumerate(site_indices)}
    rows_out = []
    coeffs_out = []
    for i in range(f.n_terms):
        base = f.keys[i].copy()
        c0 = f.coeffs[i]
        factors = []  # (col_base, matrix_row) per substituted factor
        for col_off, mat in ((2 * nA, Wu), (2 * nA + nL, Wv)):
            for s in site_indices:
                e = int(base[col_off + s])
                if e:
                    base[col_off + s] = 0
                    factors.extend([(col_off, mat[loc[int(s)]])] * e)
        if not factors:
            rows_out.append(base)
            coeffs_out.append(c0)
            continue
        expansions = [(base, c0)]
        for col_off, row_w in factors:
            nxt = []
            for key, c in expansions:
                for j, s in enumerate(site_indices):
                    w = row_w[j]
                    if w == 0:
                        continue
                    k2 = key.copy()
                    k2[col_off + s] += 1
                    nxt.append((k2, c * w))
            expansions = nxt
        for key, c in expansions:
            rows_out.append(key)
            coeffs_out.append(c)
    if not rows_out:
        return Polynomial.zero(cfg)
    return Polynomial(cfg, np.array(rows_out), np.array(coeffs_out, dtype=complex))

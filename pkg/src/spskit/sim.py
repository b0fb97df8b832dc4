"""Statevector emulation of model circuits with stochastic Pauli noise.

A state is a complex vector of length ``2**n``. Each step template of a
circuit is compiled once into a flat program: one diagonal per layer
collecting every single-pattern phase, followed by the gates' mixing blocks
as groups of global indices. Blocks come from the exact nonzero pattern of
each gate, so the program acts identically to the dense matrix while never
touching amplitudes a gate leaves alone. No ``2**n x 2**n`` matrix is formed.

Noise is unravelled into trajectories: after every step each qubit
independently receives X, Y or Z with probability ``eps3`` each. Averaged over
trajectories this is the single-qubit depolarizing channel. Shot ``s`` at
depth ``p`` draws all of its randomness from ``default_rng([seed, p, s])``,
which makes results independent of batching and worker count.
"""
from __future__ import annotations

import json
import os
import weakref
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from .basis import format_ket, parse_ket, scatter_local
from .models import Circuit

MAX_SIM_QUBITS = 26
# amplitudes held per trajectory chunk (complex128 -> 64 MiB)
_CHUNK_AMPLITUDES = 1 << 22


@dataclass(frozen=True)
class NoiseSpec:
    eps3: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= 3 * self.eps3 <= 1.0:
            raise ValueError(f"eps3={self.eps3} outside [0, 1/3]")


# -- compilation -------------------------------------------------------------


@dataclass(frozen=True)
class _Program:
    """Flat op list for all step templates of a circuit.

    Ops ``starts[t]:starts[t+1]`` make up template ``t``. An op of kind 0
    multiplies by ``diags[dpos:dpos+2**n]``; kind 1 applies an ``s x s``
    matrix to each of ``count`` index groups.
    """

    n: int
    starts: np.ndarray
    kind: np.ndarray
    size: np.ndarray
    count: np.ndarray
    ipos: np.ndarray
    mpos: np.ndarray
    dpos: np.ndarray
    idx: np.ndarray
    mats: np.ndarray
    diags: np.ndarray
    max_block: int

    def args(self):
        return (self.kind, self.size, self.count, self.ipos, self.mpos, self.dpos,
                self.idx, self.mats, self.diags)


def _blocks(m: np.ndarray) -> list[list[int]]:
    nz = (m != 0) | (m != 0).T
    dim = m.shape[0]
    label = list(range(dim))

    def find(a):
        while label[a] != a:
            label[a] = label[label[a]]
            a = label[a]
        return a

    for r, c in zip(*np.nonzero(nz)):
        ra, rc = find(int(r)), find(int(c))
        if ra != rc:
            label[max(ra, rc)] = min(ra, rc)
    groups: dict[int, list[int]] = {}
    for p in range(dim):
        groups.setdefault(find(p), []).append(p)
    return list(groups.values())


def _compile(circuit: Circuit) -> _Program:
    n = circuit.n
    if n > MAX_SIM_QUBITS:
        raise ValueError(f"statevector emulation supports n <= {MAX_SIM_QUBITS}, got {n}")
    N = 1 << n
    codes = np.arange(N, dtype=np.int64)
    kind, size, count, ipos, mpos, dpos = [], [], [], [], [], []
    idx_parts, mat_parts, diag_parts = [], [], []
    n_idx = n_mat = n_diag = 0
    starts = [0]
    max_block = 1
    for layers in circuit.templates:
        for layer in layers:
            diag = np.ones(N, dtype=complex)
            block_ops = []
            for g in layer:
                m, w = g.matrix, g.window
                mask = scatter_local((1 << g.k) - 1, w)
                pats = np.zeros(N, dtype=np.int64)
                for j, q in enumerate(w):
                    pats |= ((codes >> q) & 1) << j
                phase = np.ones(g.dim, dtype=complex)
                bases = codes[(codes & mask) == 0]
                for blk in _blocks(m):
                    if len(blk) == 1:
                        phase[blk[0]] = m[blk[0], blk[0]]
                        continue
                    offs = np.array([scatter_local(p, w) for p in blk], dtype=np.int64)
                    block_ops.append((len(blk), bases[:, None] | offs[None, :], m[np.ix_(blk, blk)]))
                if np.any(phase != 1):
                    diag *= phase[pats]
            # singleton phases of disjoint gates commute with every block in the layer
            if np.any(diag != 1):
                kind.append(0); size.append(0); count.append(0)
                ipos.append(0); mpos.append(0); dpos.append(n_diag)
                diag_parts.append(diag); n_diag += N
            for s, ix, mat in block_ops:
                kind.append(1); size.append(s); count.append(ix.shape[0])
                ipos.append(n_idx); mpos.append(n_mat); dpos.append(0)
                idx_parts.append(ix.ravel()); n_idx += ix.size
                mat_parts.append(np.ascontiguousarray(mat).ravel()); n_mat += s * s
                max_block = max(max_block, s)
        starts.append(len(kind))

    def cat(parts, dtype):
        return np.concatenate(parts).astype(dtype) if parts else np.zeros(1, dtype=dtype)

    def arr(x):
        return np.asarray(x, dtype=np.int64) if x else np.zeros(0, dtype=np.int64)

    return _Program(n, np.asarray(starts, dtype=np.int64), arr(kind), arr(size), arr(count),
                    arr(ipos), arr(mpos), arr(dpos), cat(idx_parts, np.int64),
                    cat(mat_parts, complex), cat(diag_parts, complex), max_block)


_programs: "weakref.WeakKeyDictionary[Circuit, _Program]" = weakref.WeakKeyDictionary()


def _program(circuit: Circuit) -> _Program:
    prog = _programs.get(circuit)
    if prog is None:
        prog = _programs[circuit] = _compile(circuit)
    return prog


# -- kernels -----------------------------------------------------------------


@njit(cache=True, nogil=True, fastmath=True)
def _run_ops(psi, lo, hi, kind, size, count, ipos, mpos, dpos, idx, mats, diags, buf):
    N = psi.shape[0]
    for o in range(lo, hi):
        if kind[o] == 0:
            d0 = dpos[o]
            for c in range(N):
                psi[c] *= diags[d0 + c]
            continue
        s = size[o]
        i0 = ipos[o]
        m0 = mpos[o]
        if s == 2:
            a, b, c_, d = mats[m0], mats[m0 + 1], mats[m0 + 2], mats[m0 + 3]
            for g in range(count[o]):
                i = idx[i0 + 2 * g]
                k = idx[i0 + 2 * g + 1]
                x, y = psi[i], psi[k]
                psi[i] = a * x + b * y
                psi[k] = c_ * x + d * y
            continue
        for g in range(count[o]):
            base = i0 + g * s
            for r in range(s):
                buf[r] = psi[idx[base + r]]
            for r in range(s):
                acc = 0j
                for c in range(s):
                    acc += mats[m0 + r * s + c] * buf[c]
                psi[idx[base + r]] = acc


@njit(cache=True, nogil=True)
def _popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@njit(cache=True, nogil=True)
def _pauli(psi, x, z):
    # i^{#Y} X^x Z^z with Y = i X Z; one pass per affected qubit
    N = psi.shape[0]
    q = 0
    zz = z
    while zz:
        if zz & 1:
            bit = 1 << q
            for c in range(N):
                if c & bit:
                    psi[c] = -psi[c]
        zz >>= 1
        q += 1
    q = 0
    xx = x
    while xx:
        if xx & 1:
            bit = 1 << q
            for c in range(N):
                if not c & bit:
                    t = psi[c]
                    psi[c] = psi[c | bit]
                    psi[c | bit] = t
        xx >>= 1
        q += 1
    ny = _popcount(x & z) & 3
    if ny:
        ph = 1j if ny == 1 else (-1.0 + 0j if ny == 2 else -1j)
        for c in range(N):
            psi[c] *= ph


@njit(cache=True, nogil=True)
def _evolve(states, first, last, starts, xm, zm,
            kind, size, count, ipos, mpos, dpos, idx, mats, diags, max_block):
    """Steps ``first..last`` on every row, each followed by that row's Pauli string."""
    B, N = states.shape
    T = starts.shape[0] - 1
    buf = np.empty(max_block, dtype=np.complex128)
    for b in range(B):
        psi = states[b]
        for j in range(first, last + 1):
            t = j % T
            _run_ops(psi, starts[t], starts[t + 1], kind, size, count, ipos, mpos, dpos,
                     idx, mats, diags, buf)
            if xm.shape[1] > 0:
                x = xm[b, j - first]
                z = zm[b, j - first]
                if x != 0 or z != 0:
                    _pauli(psi, x, z)


@njit(cache=True, nogil=True)
def _sample(states, u):
    B, N = states.shape
    out = np.empty(B, dtype=np.int64)
    for b in range(B):
        total = 0.0
        for c in range(N):
            v = states[b, c]
            total += v.real * v.real + v.imag * v.imag
        target = u[b] * total
        acc = 0.0
        pick = N - 1
        for c in range(N):
            v = states[b, c]
            w = v.real * v.real + v.imag * v.imag
            acc += w
            if w > 0 and acc > target:
                pick = c
                break
        out[b] = pick
    return out


@njit(cache=True, nogil=True)
def _sample_shared(psi, u):
    """As ``_sample`` for many shots of one state."""
    N = psi.shape[0]
    cum = np.empty(N)
    acc = 0.0
    for c in range(N):
        v = psi[c]
        acc += v.real * v.real + v.imag * v.imag
        cum[c] = acc
    out = np.empty(u.shape[0], dtype=np.int64)
    for b in range(u.shape[0]):
        # first c with cum[c] > target; such c always carries weight
        out[b] = min(np.searchsorted(cum, u[b] * acc, side="right"), N - 1)
    return out


_NO_NOISE = np.zeros((1, 0), dtype=np.int64)


def _run(states: np.ndarray, circuit: Circuit, first: int, last: int,
         xm: np.ndarray = _NO_NOISE, zm: np.ndarray = _NO_NOISE) -> np.ndarray:
    if last < first:
        return states
    prog = _program(circuit)
    if xm.shape[1] == 0:
        xm = zm = np.zeros((states.shape[0], 0), dtype=np.int64)
    _evolve(states, first, last, prog.starts, xm, zm, *prog.args(), prog.max_block)
    return states


# -- noiseless evolution ------------------------------------------------------


def basis_state(code: int, n: int) -> np.ndarray:
    if not 0 <= code < 1 << n:
        raise ValueError(f"state {code} out of range for n={n}")
    psi = np.zeros(1 << n, dtype=complex)
    psi[code] = 1.0
    return psi


def _as_rows(state: np.ndarray, n: int) -> np.ndarray:
    s = np.ascontiguousarray(state, dtype=complex)
    if s.shape[-1] != 1 << n:
        raise ValueError(f"state has length {s.shape[-1]}, circuit needs {1 << n}")
    return s.reshape(-1, 1 << n)


def apply_step(state: np.ndarray, circuit: Circuit, j: int) -> np.ndarray:
    """State after step ``j`` (1-based); rows of a 2-D array are separate states."""
    return apply_circuit_steps(state, circuit, 1, start=j)


def apply_circuit_steps(state: np.ndarray, circuit: Circuit, p: int, start: int = 1) -> np.ndarray:
    """Copy of ``state`` evolved through steps ``start .. start+p-1``."""
    rows = _as_rows(state, circuit.n).copy()
    _run(rows, circuit, start, start + p - 1)
    return rows.reshape(np.shape(state))


def ideal_states(circuit: Circuit, psi0: int, p_max: int) -> list[np.ndarray]:
    """Noiseless states after 0..p_max steps."""
    psi = basis_state(psi0, circuit.n)[None, :]
    out = [psi[0].copy()]
    for j in range(1, p_max + 1):
        _run(psi, circuit, j, j)
        out.append(psi[0].copy())
    return out


def ideal_distribution(circuit: Circuit, psi0: int, p: int, tol: float = 0.0):
    from .metrics import Distribution

    psi = ideal_states(circuit, psi0, p)[-1]
    return Distribution.from_probabilities(np.abs(psi) ** 2, circuit.n, tol=tol)


# -- noise -------------------------------------------------------------------


def pauli_masks(u: np.ndarray, eps3: float) -> tuple[np.ndarray, np.ndarray]:
    """Map uniforms of shape ``(..., n)`` to X-part and Z-part bitmasks.

    ``u < eps3`` is X, ``< 2 eps3`` is Y, ``< 3 eps3`` is Z, otherwise identity.
    """
    xb = u < 2 * eps3
    zb = (u >= eps3) & (u < 3 * eps3)
    weights = np.left_shift(1, np.arange(u.shape[-1], dtype=np.int64))
    return xb.astype(np.int64) @ weights, zb.astype(np.int64) @ weights


def apply_paulis(state: np.ndarray, xmask: int, zmask: int) -> np.ndarray:
    """``i^{#Y} X^x Z^z |state>`` for a single vector."""
    s = np.array(state, dtype=complex)
    codes = np.arange(s.shape[0], dtype=np.int64)
    src = codes ^ xmask
    sign = 1 - 2 * (np.bitwise_count(src & zmask) & 1).astype(np.int64)
    return s[src] * sign * (1j) ** int(np.bitwise_count(np.int64(xmask & zmask)))


def shot_rng(base_seed: int, p: int, shot: int) -> np.random.Generator:
    return np.random.default_rng([int(base_seed), int(p), int(shot)])


def _shot_draws(n: int, p: int, eps3: float, seed: int, shots: Sequence[int]):
    draws = np.stack([shot_rng(seed, p, s).random(p * n + 1) for s in shots])
    xm, zm = pauli_masks(draws[:, : p * n].reshape(len(shots), p, n), eps3)
    return xm, zm, draws[:, -1]


def _trajectory_chunk(circuit: Circuit, psi0: int, p: int, noise: NoiseSpec,
                      shots: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    n = circuit.n
    xm, zm, u = _shot_draws(n, p, noise.eps3, noise.seed, shots)
    states = np.zeros((len(shots), 1 << n), dtype=complex)
    states[:, psi0] = 1.0
    _run(states, circuit, 1, p, xm, zm)
    return states, u


def trajectory_states(circuit: Circuit, psi0: int, p: int, noise: NoiseSpec,
                      shots: Sequence[int]) -> np.ndarray:
    """Pre-measurement states of the given shots, one row per shot."""
    return _trajectory_chunk(circuit, psi0, p, noise, list(shots))[0]


def run_noisy_trajectory(circuit: Circuit, psi0: int, p: int, noise: NoiseSpec,
                         rng: np.random.Generator | int | None = None) -> int:
    """One measured basis state from a single noisy trajectory.

    ``rng`` picks the shot index: an integer is used directly, a generator
    draws one. The default is shot 0 of ``noise.seed``.
    """
    if isinstance(rng, np.random.Generator):
        shot = int(rng.integers(0, 2**62))
    else:
        shot = 0 if rng is None else int(rng)
    states, u = _trajectory_chunk(circuit, psi0, p, noise, [shot])
    return int(_sample(states, u)[0])


def default_workers() -> int:
    env = os.environ.get("SPSKIT_THREADS", "").strip()
    if not env:
        return 1
    try:
        return max(1, int(env))
    except ValueError:
        raise ValueError(f"SPSKIT_THREADS must be an integer, got {env!r}") from None


@dataclass
class MeasurementRecord:
    p: int
    shots: np.ndarray
    n: int
    seed: int
    eps3: float
    psi0: int

    def __len__(self) -> int:
        return len(self.shots)

    def counts(self) -> dict[int, int]:
        vals, cnt = np.unique(self.shots, return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, cnt)}


def sample_measurements(circuit: Circuit, psi0: int, p: int, M: int, noise: NoiseSpec,
                        workers: int | None = None) -> MeasurementRecord:
    """``M`` independent trajectories of depth ``p``, each measured once."""
    if M < 1:
        raise ValueError("need at least one shot")
    if p < 0:
        raise ValueError("depth must be >= 0")
    n = circuit.n
    _program(circuit)  # compile once, outside the worker threads
    chunk = max(1, min(1024, _CHUNK_AMPLITUDES >> n))
    chunks = [range(a, min(a + chunk, M)) for a in range(0, M, chunk)]

    if noise.eps3 == 0:
        # every trajectory is the ideal state; only the measurement draws differ
        psi = ideal_states(circuit, psi0, p)[-1]

        def run(shots):
            return _sample_shared(psi, _shot_draws(n, p, 0.0, noise.seed, shots)[2])
    else:
        def run(shots):
            states, u = _trajectory_chunk(circuit, psi0, p, noise, shots)
            return _sample(states, u)

    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(chunks) == 1:
        parts = [run(c) for c in chunks]
    else:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(run, chunks))
    return MeasurementRecord(p, np.concatenate(parts), n, noise.seed, noise.eps3, psi0)


def sample_all_depths(circuit: Circuit, psi0: int, p_max: int, M: int, noise: NoiseSpec,
                      workers: int | None = None) -> list[MeasurementRecord]:
    return [sample_measurements(circuit, psi0, p, M, noise, workers) for p in range(p_max + 1)]


# -- JSONL shot files ----------------------------------------------------------


def write_records(path, records: Iterable[MeasurementRecord], header: dict) -> None:
    """One header line, then one ``{"p", "shot", "ket"}`` line per shot."""
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for rec in records:
            for s, code in enumerate(rec.shots):
                fh.write(json.dumps({"p": rec.p, "shot": s, "ket": format_ket(int(code), rec.n)}) + "\n")


def read_records(path) -> tuple[dict, list[MeasurementRecord]]:
    with open(path) as fh:
        header = json.loads(fh.readline())
        n = int(header["n"])
        by_p: dict[int, list[tuple[int, int]]] = {}
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                by_p.setdefault(int(obj["p"]), []).append((int(obj["shot"]), parse_ket(obj["ket"], n)))
    psi0 = parse_ket(header["init"], n) if "init" in header else 0
    recs = []
    for p in sorted(by_p):
        rows = sorted(by_p[p])
        recs.append(MeasurementRecord(p, np.array([c for _, c in rows], dtype=np.int64), n,
                                      int(header.get("base_seed", 0)), float(header.get("eps", 0.0)) / 3,
                                      psi0))
    return header, recs

"""Two-block planted-partition benchmark graphs with noisy node labels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .netcore import MetadataAnnotation, Network, Partition


@dataclass(frozen=True)
class SbmSpec:
    """Parameters of the planted two-block model.

    ``noise`` is the per-node probability of carrying the label of the
    opposite block.
    """

    n: int
    p_in: float
    p_out: float
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise ValueError("n must be an even integer >= 2")
        for name in ("p_in", "p_out", "noise"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")

    @property
    def rho(self) -> float:
        """Mean edge density (p_in + p_out) / 2."""
        return (self.p_in + self.p_out) / 2.0

    @property
    def delta(self) -> float:
        """Assortativity p_in - p_out."""
        return self.p_in - self.p_out

    @classmethod
    def from_density(cls, n: int, rho: float, delta: float, noise: float = 0.0, seed: int = 0) -> "SbmSpec":
        """Parametrize by (rho, delta) instead of (p_in, p_out)."""
        p_in = rho + delta / 2.0
        p_out = rho - delta / 2.0
        if not (0.0 <= p_out and p_in <= 1.0):
            raise ValueError(
                f"delta {delta} incompatible with density {rho}: "
                f"p_in={p_in}, p_out={p_out}"
            )
        return cls(n, p_in, p_out, noise, seed)


@dataclass(frozen=True)
class SbmInstance:
    """A generated instance, restricted to the surviving nodes."""

    network: Network
    planted: Partition
    metadata: MetadataAnnotation
    dropped: tuple[int, ...]

    @property
    def dropped_count(self) -> int:
        return len(self.dropped)


def delta_star(n: int, rho: float) -> float:
    """Assortativity below which two-block structure is undetectable from topology."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must be in (0, 1)")
    return float(np.sqrt(4.0 * n * rho * (1.0 - rho)) / n)


def generate(spec: SbmSpec, largest_component_only: bool = False) -> SbmInstance:
    """Sample a graph, planted blocks, and noisy labels.

    Nodes 0..n/2-1 form block 0, the rest block 1; every unordered pair gets
    an edge with probability p_in (same block) or p_out (across), weight 1.
    Each node's label equals its block with probability 1 - noise.  Isolated
    nodes are always dropped; with ``largest_component_only`` the network is
    further restricted to its largest connected component so that
    teleportation-free dynamics are well defined.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    half = n // 2
    block = (np.arange(n) >= half).astype(np.int64)

    iu, ju = np.triu_indices(n, k=1)
    same = block[iu] == block[ju]
    prob = np.where(same, spec.p_in, spec.p_out)
    keep = rng.random(iu.size) < prob
    src, dst = iu[keep], ju[keep]

    flip = rng.random(n) < spec.noise
    labels = block ^ flip.astype(np.int64)

    present = np.zeros(n, dtype=bool)
    present[src] = True
    present[dst] = True
    if largest_component_only and present.any():
        mat = csr_matrix((np.ones(src.size), (src, dst)), shape=(n, n))
        ncomp, comp = connected_components(mat, directed=False)
        comp_sizes = np.bincount(comp[present], minlength=ncomp)
        present &= comp == int(np.argmax(comp_sizes))

    survivors = np.flatnonzero(present)
    if survivors.size < 2:
        raise ValueError("degenerate instance: fewer than 2 surviving nodes")
    new_id = -np.ones(n, dtype=np.int64)
    new_id[survivors] = np.arange(survivors.size)
    edge_keep = present[src]  # edges never span components
    src, dst = src[edge_keep], dst[edge_keep]

    network = Network(
        n=survivors.size,
        directed=False,
        edge_src=new_id[src],
        edge_dst=new_id[dst],
        edge_weight=np.ones(src.size),
        node_names=tuple(str(i) for i in survivors),
    )
    planted = Partition.from_labels(block[survivors].tolist())
    metadata = MetadataAnnotation.from_labels([str(x) for x in labels[survivors]])
    dropped = tuple(int(i) for i in np.flatnonzero(~present))
    return SbmInstance(network, planted, metadata, dropped)

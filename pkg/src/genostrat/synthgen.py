"""Seeded synthetic cohorts (VCF + panel) with tunable population divergence.

Per variant a base alternate-allele frequency is drawn from U[0.05, 0.95];
each population's frequency is Beta distributed around it with variance
``divergence * base * (1 - base)``; genotypes are two independent draws.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .genio import allele_frequency

_BASES = np.array(list("ACGT"))
_SUPER_ROUND_ROBIN = ("EUR", "EAS", "AFR", "AMR", "SAS")


@dataclass(frozen=True)
class CohortSpec:
    n_populations: int = 3
    samples_per_population: int = 100
    n_variants: int = 3000
    divergence: float = 0.1
    seed: int = 42

    def __post_init__(self):
        if min(self.n_populations, self.samples_per_population, self.n_variants) < 1:
            raise ConfigError("cohort counts must all be >= 1")
        if not 0.0 < self.divergence < 1.0:
            raise ConfigError(f"divergence must lie in (0, 1), got {self.divergence}")


def sample_ids(spec: CohortSpec) -> list[str]:
    n = spec.n_populations * spec.samples_per_population
    width = max(5, len(str(n - 1)))
    return [f"S{i:0{width}d}" for i in range(n)]


def population_frequencies(base: np.ndarray, divergence: float, n_populations: int,
                           rng: np.random.Generator) -> np.ndarray:
    """Beta(mean=base, var=divergence*base*(1-base)) draws, shape (variants, populations)."""
    concentration = 1.0 / divergence - 1.0
    a = base * concentration
    b = (1.0 - base) * concentration
    return rng.beta(a[:, None], b[:, None], size=(len(base), n_populations))


def simulate(spec: CohortSpec):
    """Draw the cohort in memory: (base freqs, population freqs, genotype alleles, population per sample).

    ``alleles`` has shape (variants, samples, 2) with 0 = reference, 1 = alternate.
    """
    rng = np.random.default_rng(spec.seed)
    base = rng.uniform(0.05, 0.95, size=spec.n_variants)
    freqs = population_frequencies(base, spec.divergence, spec.n_populations, rng)
    pop_of_sample = np.repeat(np.arange(spec.n_populations), spec.samples_per_population)
    p = freqs[:, pop_of_sample]
    alleles = (rng.random((spec.n_variants, len(pop_of_sample), 2)) < p[:, :, None]).astype(np.int8)
    ref_idx = rng.integers(0, 4, size=spec.n_variants)
    alt_idx = (ref_idx + rng.integers(1, 4, size=spec.n_variants)) % 4
    return base, freqs, alleles, pop_of_sample, _BASES[ref_idx], _BASES[alt_idx]


def generate(spec: CohortSpec) -> tuple[list[str], list[str]]:
    """Return (vcf_lines, panel_lines), newline-free; deterministic in ``spec``."""
    _, _, alleles, pop_of_sample, refs, alts = simulate(spec)
    names = sample_ids(spec)
    n_samples = len(names)
    an = 2 * n_samples
    vcf = [
        "##fileformat=VCFv4.1",
        "##source=genostrat.synthgen",
        f"##genostrat_cohort=populations:{spec.n_populations};samples_per_population:"
        f"{spec.samples_per_population};variants:{spec.n_variants};divergence:{spec.divergence!r};seed:{spec.seed}",
        '##INFO=<ID=AC,Number=A,Type=Integer,Description="Alternate allele count">',
        '##INFO=<ID=AF,Number=A,Type=Float,Description="Alternate allele frequency">',
        '##INFO=<ID=AN,Number=1,Type=Integer,Description="Total number of alleles">',
        '##FORMAT=<ID=GT,Number=1,Type=String,Description="Genotype">',
        "\t".join(["#CHROM", "POS", "ID", "REF", "ALT", "QUAL", "FILTER", "INFO", "FORMAT"] + names),
    ]
    tokens = np.array(["0|0", "0|1", "1|0", "1|1"])
    for v in range(spec.n_variants):
        a = alleles[v]
        ac = int(a.sum())
        gts = tokens[a[:, 0] * 2 + a[:, 1]]
        info = f"AC={ac};AF={allele_frequency(ac, an):.6f};AN={an};NS={n_samples}"
        fixed = ["1", str(1000 + 100 * v), f"snp{v:07d}", str(refs[v]), str(alts[v]), "100", "PASS", info, "GT"]
        vcf.append("\t".join(fixed + gts.tolist()))
    panel = ["sample\tpop\tsuper_pop\tgender"]
    for i, name in enumerate(names):
        pop = int(pop_of_sample[i])
        sup = _SUPER_ROUND_ROBIN[pop % len(_SUPER_ROUND_ROBIN)]
        gender = "male" if i % 2 == 0 else "female"
        panel.append(f"{name}\tP{pop}\t{sup}\t{gender}")
    return vcf, panel


def write_cohort(spec: CohortSpec, directory: str | os.PathLike, stem: str = "cohort") -> tuple[Path, Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    vcf, panel = generate(spec)
    vcf_path = d / f"{stem}.vcf"
    panel_path = d / f"{stem}.panel"
    vcf_path.write_text("\n".join(vcf) + "\n", encoding="utf-8")
    panel_path.write_text("\n".join(panel) + "\n", encoding="utf-8")
    return vcf_path, panel_path

"""hatpes: dataset generation and neural-potential training for hydrogen
atom transfer reactions in peptide-like molecules.

Subpackages:
    core         structures, units, RNG streams, extended-XYZ IO
    calculators  energy/force backends (analytic surrogate, external subprocess)
    nms          Hessians, normal-mode analysis, normal-mode sampling
    hatbuild     radical system construction, reaction-configuration sampling,
                 linear interpolation paths
    mlp          invariant message-passing potential and training loop
    evaluation   metrics, splits, learning-curve / transferability harnesses
    templates    packaged peptide-like structure templates
"""

__version__ = "0.1.0"

"""Population stratification from genotype data.

Modules: ``genio`` (VCF and panel parsing), ``featurize`` (count matrices),
``synthgen`` (synthetic cohorts), ``nncore`` / ``mlp`` / ``rbm`` / ``dbn``
(classifiers), ``kmeans`` / ``dec`` (clustering), ``metrics``, ``store`` and
``cli``.
"""

__version__ = "0.1.0"

"""Covariate drift detection via the Half-KFN farthest-neighbor statistic."""

from .feature_space import (ReducerModel, SampleSet, argmax_class, argmax_classes,
                            load_softmax_vectors, reduce, save_softmax_vectors,
                            train_reducer)
from .half_kfn import (FarthestNeighborTable, HalfKfnValue, PooledSample,
                       half_kfn_fn_form, half_kfn_matrix_form,
                       intra_class_farthest_neighbors)
from .inference import (BootstrapConfig, MomentEstimate, PermutationConfig,
                        TestReport, asymptotic_moments, bootstrap_test,
                        estimate_p1_p2_k1, finite_sample_moments,
                        permutation_test)
from .baselines import (BaselineStatistic, energy_statistic, fr_statistic,
                        knn_statistic, mmd_statistic, permutation_test_generic)
from .harness import (ExperimentConfig, PowerReport, generate_bootstrap_pools,
                      generate_simulated_training, generate_test_split,
                      inject_gaussian_drift, run_power_study,
                      run_timing_benchmark)

__version__ = "0.1.0"

from .geometry import (
    DyadicGrid,
    DyadicInterval,
    Tile,
    TileCollection,
    Tree,
    Universe,
    check_disjointness_property,
    split_into_up_trees,
    tile_le,
    tile_le_d,
    tile_le_u,
)
from .values import ComplexScalar, HilbertVector, SchattenMatrix, make_space, schatten_norm
from .sampling import MeasurableSet, SampledFunction, Sampling
from .wave_packets import MotherWavelet, build_mother_wavelet, coefficients, synthesize_packet
from .operators import (
    FrequencyChoice,
    PeriodicFunction,
    hardy_littlewood,
    maximal_partial_sum,
    model_carleson,
    partial_sum,
    periodic_partial_sum,
    tree_operator,
)
from .density_energy import (
    DensityContext,
    EnergyContext,
    density,
    density_split,
    energy,
    energy_split,
    full_decomposition,
)
from .ensembles import DisjPropEnsembleSpec, random_disjprop_collection
from .tile_type import RatioReport, major_subset, run_experiment
from .config import ExperimentConfig, load_config
from .paths import get_path, set_path
from .utils import ConfigError, NumericalFloorError, PhasePlaneError, PreconditionError


def get_version():
    import importlib.metadata

    try:
        return importlib.metadata.version("phaseplane")
    except importlib.metadata.PackageNotFoundError:
        return "0.0.0"


__version__ = get_version()

"""rascap: capacity bounds and Monte-Carlo simulation for receive antenna
selection in massive MIMO over i.i.d. Rayleigh fading."""

from .bounds import (
    AliasingError,
    CharacteristicGrid,
    DensityGrid,
    GaussianApprox,
    NormalDensity,
    asymptotic_ergodic,
    bub_density,
    bub_gaussian,
    bub_gaussian_direct,
    mub_characteristic,
    mub_characteristic_power_form,
    mub_density,
    mub_ergodic_moments,
    mub_moments,
)
from .channel import (
    CapacityError,
    ChannelMatrix,
    SystemConfig,
    bub_of_channel,
    capacity,
    mub_of_channel,
    sample_channel,
)
from .mc import (
    EmpiricalSample,
    ks_distance,
    sample_bub_exact,
    sample_mub_exact,
    sample_selected_capacity,
    summarize,
)
from .numerics import (
    ComplexSeries,
    QuadratureError,
    QuadratureSpec,
    fft_forward,
    fft_inverse,
    integrate_complex,
    integrate_semi_infinite,
    inverse_survival_threshold,
    regularized_upper_gamma,
)
from .selection import (
    SearchBudgetError,
    SelectionResult,
    exhaustive_select,
    greedy_select,
)

__version__ = "0.1.0"

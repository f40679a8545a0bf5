"""Ghost-imaging mask synthesis, simulation, reconstruction and analysis."""
from .errors import (ConfigError, DegenerateInputError, DimensionError, GhostMaskError, PairingError,
                     ParameterError, PreconditionError, RangeError, SizeError)
from .forward import (AcquisitionModel, BeamModel, FabricationModel, MeasurementRecord, MisalignmentModel,
                      apply_fabrication, drift_series, measure, perturb_alignment, shift_pattern)
from .patterns import (GridSpec, MaskKind, MasterMask, PatternSet, bin, complement, extract_pattern_set,
                       gen_master, gen_mura, preset, unique_pattern_set)
from .phantoms import PhantomSpec, make_phantom
from .recon import (ReconImage, SolverConfig, reconstruct, recon_adjoint, recon_dgi, recon_differential,
                    recon_kaczmarz, recon_landweber, recon_pinv)

__version__ = "0.1.0"

class PlateError(Exception):
    exit_code: int = 1

    def __init__(self, detail: str, history: list[float] | None = None):
        super().__init__(detail)
        self.detail: str = detail
        self.history: list[float] | None = history

class ConfigError(PlateError):
    exit_code: int = 2

class NumericalError(PlateError):
    exit_code: int = 1

def bad_config(reason: str = "Invalid configuration") -> ConfigError:
    return ConfigError(reason)

def missing_block(name: str, command: str) -> ConfigError:
    return ConfigError(f"Missing block '{name}' required by command '{command}'")

def invalid_material(reason: str) -> ConfigError:
    return ConfigError(f"Invalid material: {reason}")

def non_commensurate_box(box_side: float, period: float) -> ConfigError:
    return ConfigError(f"box_side {box_side} is not a whole number of texture periods ({period}); "
                       "the periodized phase map would tear at the box boundary")

def empty_poisson_draw(seed: int, stream: int) -> NumericalError:
    return NumericalError(f"Poisson draw for seed {seed} (stream {stream}) has no points; "
                          "no Voronoi partition exists. Enable PLATEHOM_RESAMPLE_EMPTY to retry on the next stream")

def dimension_mismatch(expected: tuple, got: tuple) -> ConfigError:
    return ConfigError(f"Dimension mismatch: expected {expected}, got {got}")

def missing_phase(phase_id: int) -> ConfigError:
    return ConfigError(f"Phase {phase_id} is not present in the material table")

def cg_not_converged(history: list[float], cap: int) -> NumericalError:
    last = history[-1] if history else float("nan")
    return NumericalError(f"CG did not converge within {cap} iterations (last relative residual {last:.3e})",
                          history=history)

def non_spd(reason: str) -> NumericalError:
    return NumericalError(f"Matrix is not symmetric positive definite: {reason}")

def under_resolved(reason: str) -> ConfigError:
    return ConfigError(f"Under-resolved quadrature: {reason}")

def missing_corrector(patch: int) -> ConfigError:
    return ConfigError(f"No corrector available for patch {patch}")

def with_seed(error: PlateError, seed: int) -> PlateError:
    annotated = type(error)(f"seed {seed}: {error.detail}", history=error.history)
    return annotated

singular_assembly: NumericalError = NumericalError(
    "Singular assembly: a phase produced a non-positive stiffness diagonal"
)

def decomposition_failed(residual: float, tol: float) -> NumericalError:
    return NumericalError(f"Decomposition parts are not orthogonal: residual {residual:.3e} exceeds {tol:.1e}")

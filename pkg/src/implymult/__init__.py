"""Serial IMPLY-logic multipliers: microcode simulator, cell and PPU libraries,
array-multiplier builder, cost model and image-convolution driver."""

from .core import ImplyError, Instruction, Machine, Program, run_program
from .multiplier import MultiplierDesign, build_array, build_signed_array, build_unsigned_array, multiply

__all__ = ["ImplyError", "Instruction", "Machine", "Program", "run_program", "MultiplierDesign",
           "build_array", "build_signed_array", "build_unsigned_array", "multiply"]
__version__ = "0.1.0"

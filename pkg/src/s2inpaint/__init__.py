"""Spherical image inpainting with Haar tight framelets and plug-and-play ADMM."""
from .denoiser import DenoiserError, DenoiserSpec, denoise, soft_shrink
from .framelet import FrameletPyramid, decompose, decompose_level, reconstruct, reconstruct_level
from .metrics import MaskSpec, gen_mask, psnr, ssim
from .partition import PatchId, ParamRect, Partition, build_partition, face_map, locate, patch_center, rect_area
from .signal import Mask, SphericalSignal, from_equirectangular, single_face_ingest, to_equirectangular
from .solver import DivergenceError, RunReport, SolverParams, SolverState, admm_step, inpaint

__version__ = "0.1.0"

__all__ = [
    "DenoiserError",
    "DenoiserSpec",
    "DivergenceError",
    "FrameletPyramid",
    "Mask",
    "MaskSpec",
    "ParamRect",
    "Partition",
    "PatchId",
    "RunReport",
    "SolverParams",
    "SolverState",
    "SphericalSignal",
    "admm_step",
    "build_partition",
    "decompose",
    "decompose_level",
    "denoise",
    "face_map",
    "from_equirectangular",
    "gen_mask",
    "inpaint",
    "locate",
    "patch_center",
    "psnr",
    "reconstruct",
    "reconstruct_level",
    "rect_area",
    "single_face_ingest",
    "soft_shrink",
    "ssim",
    "to_equirectangular",
]

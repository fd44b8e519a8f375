"""warpkit: training-free pose warping, conditioning assembly, attention
losses, and human-image curation."""

from .attention import (
    LossBreakdown,
    cross_attention,
    localization_loss,
    localization_loss_grad,
    noise_mse,
    total_loss,
)
from .conditioning import (
    ConditionStack,
    PartFeatureSet,
    PartSegmentation,
    augment_parts,
    extract_background,
    extract_part_features,
    pack_condition,
    remove_garment,
    render_pose_keypoints,
    render_pose_map,
)
from .curation import (
    AnnotationRecord,
    CriterionReport,
    CurationConfig,
    CurationStats,
    curate_manifest,
    curate_stream,
    evaluate_record,
)
from .dense_warp import UVAtlas, build_uv_atlas, fill_atlas_holes, warp_dense
from .imaging import (
    DensePoseMap,
    Image,
    Keypoint,
    KeypointSet,
    Mask,
    Placement,
    bilinear_sample,
    resize,
    resize_pad,
    unpad,
)
from .sparse_warp import (
    Homography,
    estimate_homography,
    match_landmarks,
    warp_garment,
    warp_perspective,
)

__version__ = "0.1.0"

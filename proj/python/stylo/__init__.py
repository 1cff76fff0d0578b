"""Style-vector behavioral cloning: routed low-rank adapters on a toy grid game."""

try:
    from . import _stylo as _impl  # wheel layout: extension inside the package
except ImportError:  # in-tree builds put the extension on sys.path directly
    import _stylo as _impl

__all__ = [
    "Action",
    "GameState",
    "Model",
    "NetConfig",
    "Side",
    "StyleParams",
    "Winner",
    "apply_action",
    "cosine_similarity",
    "cross_entropy_loss",
    "encode_state",
    "from_frame_action",
    "initial_state",
    "legal_actions",
    "load_style_vectors",
    "matmul",
    "mirror",
    "mix_mhr",
    "mix_poly",
    "play_match_scripted",
    "softmax",
    "style_delta",
    "to_frame_action",
]

for _name in __all__:
    globals()[_name] = getattr(_impl, _name)
del _name, _impl

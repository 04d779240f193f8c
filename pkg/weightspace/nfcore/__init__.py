from .arch import FieldArch, FieldKind, LayerSpec
from .fields import WeightOverlay, base_forward, fourier_layer, mapping_forward, modulate_weights, standalone_forward
from .weights import StyleVector, WeightSet, flatten_tensors, init_std, unflatten_tensors

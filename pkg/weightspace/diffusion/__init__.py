from .checkpoint import *
from .configuration import *
from .denoiser import *
from .sample import *
from .schedule import *
from .tokenizers import *
from .train import *

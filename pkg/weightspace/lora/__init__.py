from .adapt import *
from .mask import *
from .params import *

from .chamfer import *
from .export import *
from .grid import *
from .marching import *
from .surface import *

from .configuration import *
from .probes import *
from .structure import *

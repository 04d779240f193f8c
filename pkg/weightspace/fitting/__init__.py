from .configuration import *
from .dataset import *
from .fit import *
from .metrics import *
from .sampling import *
from .spaces import *

from .checkpoint import *
from .configuration import *
from .container import *
from .manifest import *
from .netpbm import *
from .store import *
from .toy import *
from .wsd import *

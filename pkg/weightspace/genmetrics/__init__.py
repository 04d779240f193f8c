from .configuration import *
from .distances import *
from .evaluate import *
from .features import *
from .trio import *

from .files import load_document, read_configuration_file

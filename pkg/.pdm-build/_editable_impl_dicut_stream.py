from editables.redirector import RedirectingFinder as F
F.install()
F.map_module('dicut_stream', '/root/pkg/src/dicut_stream/__init__.py')
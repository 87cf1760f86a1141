from hypothesis import settings

# deterministic property runs: same examples every invocation
settings.register_profile("deterministic", derandomize=True)
settings.load_profile("deterministic")

# Packaged run recipes; load them with ba137sim.config.load_config("fig2") etc.

import os
import sys

# Add src directory to Python path
src_dir = os.path.join(os.path.dirname(os.path.abspath(__file__)), "src")
sys.path.insert(0, src_dir)

from diffusion_mpc.harness.cli import main

PIPELINE = ['demo-gen', 'train', 'eval', 'ablate']


def run_pipeline(extra_args):
    for command in PIPELINE:
        code = main([command] + extra_args)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    args = sys.argv[1:]
    if args and not args[0].startswith('-'):
        sys.exit(main(args))
    sys.exit(run_pipeline(args))

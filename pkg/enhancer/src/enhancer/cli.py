"""CLI for the enhancement stage: `enhancer train` and `enhancer apply`."""
from __future__ import annotations

import logging
import sys

import click

from .errors import EnhancerError
from .train import EnhancerConfig, train as train_fn


@click.group()
def cli():
    """Learned final-stage enhancement for pipeline outputs."""


@cli.command()
@click.option("--manifest", required=True, type=click.Path(exists=True),
              help="Degradation manifest JSON from the primary toolkit.")
@click.option("--out", "model_out", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="EnhancerConfig JSON overrides.")
def train(manifest, model_out, config_path):
    """Train the tiny 3D U-Net on (degraded, ground-truth) pairs."""
    cfg = EnhancerConfig.from_file(config_path) if config_path else EnhancerConfig()
    path = train_fn(manifest, cfg, model_out)
    click.echo(str(path))


@cli.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--mask", required=True, type=click.Path(exists=True))
@click.option("--model", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def apply(in_path, mask, model, out_path):
    """Apply a trained enhancer inside the mask."""
    from .infer import enhance
    click.echo(str(enhance(in_path, mask, model, out_path)))


def main(argv=None):
    logging.basicConfig(level=logging.INFO)
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.ClickException as e:
        e.show()
        sys.exit(1)
    except EnhancerError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    main()

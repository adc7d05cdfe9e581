"""
Application principale: interface en ligne de commande du solveur.
Sous-commandes run, sweep, oracle, sigma-dump et default-config.
"""

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from sirgate.config import SimulationConfig, configure_for_development, configure_for_oracle, reference_config
from sirgate.core.coefficients import diffusion_field
from sirgate.core.galerkin import discrepancy, run_oracle
from sirgate.core.metrics import summarize
from sirgate.core.state import Compartment
from sirgate.core.stepper import run_simulation
from sirgate.core.sweep_service import TABLE_LAMBDAS, SweepService, run_lambda_grid, run_lambda_sweep
from sirgate.errors import ConfigError, NumericalError, SirgateError
from sirgate.files.config_file import DEFAULT_CONFIG_NAME, format_config, parse_config, write_default_config
from sirgate.files.writers import (
    emit_discrepancy,
    emit_heatmap,
    emit_interface,
    emit_lambda_grid,
    emit_lockdown_intervals,
    emit_sigma_dump,
    emit_summary,
    emit_timeseries,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

LOG_FILE = "sirgate.log"


class UsageError(Exception):
    """Erreur d'usage de la ligne de commande"""


class _Parser(argparse.ArgumentParser):
    """argparse sans sys.exit: les erreurs d'usage deviennent UsageError"""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter, argparse.RawDescriptionHelpFormatter):
    """Défauts des options affichés, épilogue laissé tel quel"""


PRESETS = {
    "reference": lambda cfg: cfg,
    "dev": configure_for_development,
    "oracle": configure_for_oracle,
}


class Application:
    """Application principale: journalisation, exécution et écriture des sorties"""

    def __init__(self, out_dir: str | Path = ".", threads: int = 1, debug: bool = False):
        self.out_dir = Path(out_dir)
        self.threads = threads
        self.debug = debug
        self.logger = logging.getLogger(__name__)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._setup_logging()

    def _setup_logging(self):
        """Configure le système de logging (stderr, et fichier hors mode debug)"""
        logging.basicConfig(
            level=logging.DEBUG if self.debug else logging.INFO,
            format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            handlers=[
                logging.StreamHandler(sys.stderr),
                (logging.FileHandler(self.out_dir / LOG_FILE)
                 if not self.debug else logging.NullHandler()),
            ],
            force=True,
        )

    def run_single(self, cfg: SimulationConfig) -> dict[str, Path]:
        """Une simulation: série temporelle, trois cartes, synthèse, interface et intervalles de confinement"""
        record = run_simulation(cfg)
        outputs = {"timeseries": emit_timeseries(record, self.out_dir / "timeseries.csv")}
        for compartment in Compartment:
            outputs[f"heatmap_{compartment.name}"] = emit_heatmap(
                record, compartment, self.out_dir / f"heatmap_{compartment.name}.csv"
            )
        outputs["summary"] = emit_summary([summarize(record)], self.out_dir / "summary.csv")
        outputs["interface"] = emit_interface(record, self.out_dir / "interface.csv")
        outputs["lockdown"] = emit_lockdown_intervals(record, self.out_dir / "lockdown.csv")
        self.logger.info(f"Sorties écrites dans {self.out_dir}")
        return outputs

    def _sweep_service(self) -> SweepService:
        service = SweepService(max_workers=self.threads)

        def log_progress(done: int, total: int) -> None:
            self.logger.info(f"Point {done}/{total} terminé")

        service.add_progress_callback(log_progress)
        return service

    def run_sweep(
        self,
        cfg: SimulationConfig,
        lambdas: Sequence[float] | None = None,
        grid1: Sequence[float] | None = None,
        grid2: Sequence[float] | None = None,
    ) -> dict[str, Path]:
        """Balayage λ₁ = λ₂ (sweep.csv) ou grille (λ₁, λ₂) (grid.csv)"""
        service = self._sweep_service()
        if grid1 or grid2:
            grid = run_lambda_grid(cfg, list(grid1 or []), list(grid2 or []), service=service)
            return {
                "grid": emit_lambda_grid(grid, self.out_dir / "grid.csv"),
                "grid_summary": emit_summary(
                    [grid.rows[key] for key in sorted(grid.rows)], self.out_dir / "grid_summary.csv"
                ),
            }
        rows = run_lambda_sweep(cfg, list(lambdas if lambdas is not None else TABLE_LAMBDAS), service=service)
        return {"sweep": emit_summary(rows, self.out_dir / "sweep.csv")}

    def run_oracle_report(self, cfg: SimulationConfig, n_modes: int) -> dict[str, Path]:
        """Volumes finis et Galerkin côte à côte, écart L² relatif par trame"""
        record = run_simulation(cfg)
        oracle = run_oracle(cfg, n_modes)
        report = discrepancy(record, oracle)
        self.logger.info(f"Écart final FVM/Galerkin: {report.final:.3e}")
        return {
            "discrepancy": emit_discrepancy(report, self.out_dir / "discrepancy.csv"),
            "summary": emit_summary([summarize(record)], self.out_dir / "summary.csv"),
        }

    def dump_sigma(self, cfg: SimulationConfig, y_points: int, t_points: int) -> dict[str, Path]:
        """Surface σ(y, t) de la région 1 sur [x_left, x_right] × [0, t_final]"""
        field = diffusion_field(cfg, 1)
        y = np.linspace(cfg.grid.x_left, cfg.grid.x_right, y_points)
        t = np.linspace(0.0, cfg.t_final, t_points)
        return {"sigma": emit_sigma_dump(field, y, t, self.out_dir / "sigma.csv")}


def _float_list(text: str) -> list[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"liste de réels attendue: {text!r}") from e


def defaults_epilog() -> str:
    """Valeurs par défaut de toutes les clés du fichier de configuration"""
    return "valeurs par défaut du fichier de configuration (clé = valeur):\n\n" + format_config(reference_config())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="fichier clé = valeur (défaut: configuration de référence)")
    common.add_argument("--preset", choices=sorted(PRESETS), default="reference",
                        help="préréglage appliqué à la configuration "
                             "(dev: horizon de 30 jours, oracle: problème lisse de 20 jours)")
    common.add_argument("--out-dir", type=Path, default=Path("."), help="répertoire des sorties")
    common.add_argument("--threads", type=int, default=1, help="processus du balayage")
    common.add_argument("--seedless", action="store_true",
                        help="vérifie qu'aucun générateur aléatoire n'est utilisé (exécutions déterministes)")
    common.add_argument("--debug", action="store_true", help="logs détaillés, sans fichier de log")

    epilog = defaults_epilog()
    parser = _Parser(prog="sirgate", description="Solveur SIR dégénéré à deux régions",
                     epilog=epilog, formatter_class=_HelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name: str, help_text: str, parents=(common,)) -> argparse.ArgumentParser:
        return sub.add_parser(name, parents=list(parents), help=help_text, description=help_text,
                              epilog=epilog, formatter_class=_HelpFormatter)

    command("run", "une simulation")

    sweep = command("sweep", "balayage de λ")
    sweep.add_argument("--lambdas", type=_float_list,
                       help="valeurs λ₁ = λ₂ (défaut: les huit valeurs de référence)")
    sweep.add_argument("--grid1", type=_float_list, help="grille de λ₁")
    sweep.add_argument("--grid2", type=_float_list, help="grille de λ₂")

    oracle = command("oracle", "comparaison volumes finis / Galerkin")
    oracle.add_argument("--modes", type=int, default=32, help="nombre de modes par région")

    sigma = command("sigma-dump", "surface σ(y, t)")
    sigma.add_argument("--y-points", type=int, default=201, help="points en y")
    sigma.add_argument("--t-points", type=int, default=301, help="points en t")

    default = command("default-config", "écrit la configuration de référence", parents=())
    default.add_argument("--output", type=Path, default=Path(DEFAULT_CONFIG_NAME),
                         help="fichier de sortie ('-' pour la sortie standard)")
    return parser


def _assert_seedless() -> None:
    """Aucun module du paquet ne détient de générateur aléatoire"""
    for name, module in list(sys.modules.items()):
        if name.startswith("sirgate") and any(
            isinstance(value, np.random.Generator | np.random.RandomState) for value in vars(module).values()
        ):
            raise RuntimeError(f"générateur aléatoire trouvé dans {name}")


def cli_main(argv: Sequence[str] | None = None) -> int:
    """Point d'entrée de la ligne de commande; renvoie le code de sortie"""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"sirgate: {e}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "default-config":
        if str(args.output) == "-":
            sys.stdout.write(format_config(reference_config()))
            return EXIT_OK
        try:
            write_default_config(args.output)
        except OSError as e:
            print(f"sirgate: {e}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK

    app = Application(args.out_dir, threads=args.threads, debug=args.debug)
    try:
        if args.seedless:
            _assert_seedless()
        cfg = parse_config(args.config) if args.config else reference_config()
        cfg = PRESETS[args.preset](cfg)
        if args.command == "run":
            app.run_single(cfg)
        elif args.command == "sweep":
            app.run_sweep(cfg, args.lambdas, args.grid1, args.grid2)
        elif args.command == "oracle":
            app.run_oracle_report(cfg, args.modes)
        elif args.command == "sigma-dump":
            app.dump_sigma(cfg, args.y_points, args.t_points)
    except ConfigError as e:
        app.logger.error(f"Erreur de configuration: {e}")
        return EXIT_CONFIG
    except NumericalError as e:
        app.logger.error(f"Échec numérique: {e}")
        return EXIT_NUMERICAL
    except (SirgateError, OSError, ValueError) as e:
        app.logger.error(f"Erreur: {e}")
        return EXIT_CONFIG
    except Exception as e:
        app.logger.exception(f"Erreur inattendue: {e}")
        return EXIT_CONFIG
    return EXIT_OK


def run():
    """Point d'entrée du script `sirgate`"""
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    run()

"""
Interface en ligne de commande: validation et compilation des modèles,
évaluation hors ligne, service de décision et jetons Actor.

Codes de sortie:
    0  succès
    1  décision différente de Permit (eval --expect-permit)
    2  erreur d'utilisation
    3  échec de validation, de lecture ou de vérification
"""
import sys
import time
from enum import IntEnum
from pathlib import Path
from typing import List, Optional, Sequence

import click

from app.actor.core import ActorError, format_token, issue_token, parse_token, verify_token
from app.compiler.core import DEFAULT_SCHEME, CompilationError, compile_model, write_policy_dir
from app.pap.core import PolicyLoadError, load_policy_dir
from app.pdp.core import EvalTrace, decide, enabled_roles_query
from app.policy.schema import Decision
from app.policy.xml_io import PolicyParseError, parse_request, serialize_response
from app.rbac.core import ModelError, load_model, service_relation, validate_model
from app.utils.errors import PRBACError
from app.utils.logging import get_logger, setup_logging
from app.utils.settings import get_settings

logger = get_logger(__name__)


class ExitCode(IntEnum):
    OK = 0
    NOT_PERMIT = 1
    USAGE = 2
    INVALID = 3


def _fail(error: PRBACError) -> ExitCode:
    click.echo(str(error), err=True)
    return ExitCode.INVALID


@click.group(help=__doc__)
@click.option("--log-level", default="WARNING", envvar="PRBAC_LOG_LEVEL", show_default=True)
def cli(log_level: str):
    setup_logging(log_level)


@cli.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
def validate(model: str):
    """Affiche les violations du modèle (code 3 s'il y en a)."""
    try:
        doc = load_model(Path(model))
    except ModelError as e:
        return _fail(e)
    violations = validate_model(doc)
    for violation in violations:
        click.echo(str(violation))
    return ExitCode.INVALID if violations else ExitCode.OK


@cli.command("compile")
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", required=True, type=click.Path(file_okay=False))
def compile_cmd(model: str, output: str):
    """Compile le modèle en PolicySets XACML et roots.txt."""
    try:
        store = compile_model(load_model(Path(model)))
    except CompilationError as e:
        for violation in e.violations:
            click.echo(str(violation), err=True)
        return ExitCode.INVALID
    except ModelError as e:
        return _fail(e)
    written = write_policy_dir(store, output)
    click.echo(f"{len(written) - 1} PolicySets écrits dans {output}", err=True)
    return ExitCode.OK


@cli.command("eval")
@click.option("--policies", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--request", "request_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--expect-permit", is_flag=True, help="Code 1 si la décision n'est pas Permit.")
@click.option("--trace", is_flag=True, help="Étapes d'évaluation sur stderr.")
def eval_cmd(policies: str, request_file: str, expect_permit: bool, trace: bool):
    """Évalue une requête et écrit la Response XML sur stdout."""
    try:
        store = load_policy_dir(policies)
        req = parse_request(Path(request_file).read_bytes())
    except (PolicyLoadError, PolicyParseError) as e:
        return _fail(e)
    eval_trace = EvalTrace()
    response = decide(store, req, eval_trace)
    if trace:
        for node_id, decision in eval_trace.steps:
            click.echo(f"{node_id}\t{decision.value}", err=True)
    click.echo(serialize_response(response).decode("utf-8"), nl=False)
    if expect_permit and response.decision is not Decision.PERMIT:
        return ExitCode.NOT_PERMIT
    return ExitCode.OK


@cli.command()
@click.option("--policies", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--subject", required=True, type=click.Path(exists=True, dir_okay=False))
def roles(policies: str, subject: str):
    """Liste les URIs de rôle activables par le sujet."""
    try:
        store = load_policy_dir(policies)
        req = parse_request(Path(subject).read_bytes())
    except (PolicyLoadError, PolicyParseError) as e:
        return _fail(e)
    for uri in enabled_roles_query(store, req.subject_attrs, ras_prefix=f"{DEFAULT_SCHEME.ras_prefix}:"):
        click.echo(uri)
    return ExitCode.OK


@cli.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
def relation(model: str):
    """Affiche la relation rôle/service induite (rôle<TAB>service)."""
    try:
        doc = load_model(Path(model))
    except ModelError as e:
        return _fail(e)
    violations = validate_model(doc)
    if violations:
        for violation in violations:
            click.echo(str(violation), err=True)
        return ExitCode.INVALID
    for role, service in sorted(service_relation(doc)):
        click.echo(f"{role}\t{service}")
    return ExitCode.OK


@cli.command()
@click.option("--policies", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--listen", default=None, help="host:port (sinon PRBAC_LISTEN)")
@click.option("--actor", is_flag=True, help="Active le protocole Actor.")
def serve(policies: str, listen: Optional[str], actor: bool):
    """Démarre le service de décision."""
    from app.main import start

    try:
        config = get_settings(policy_dir=policies, listen_address=listen, actor_mode=True if actor else None)
        start(config)
    except PRBACError as e:
        return _fail(e)
    except ValueError as e:
        click.echo(str(e), err=True)
        return ExitCode.USAGE
    return ExitCode.OK


@cli.group()
def token():
    """Jetons Actor (secret lu dans l'environnement)."""


@token.command("issue")
@click.option("--user", required=True)
@click.option("--role-uri", required=True)
@click.option("--time", "issued_at", type=click.IntRange(min=0), default=None, help="Secondes Unix (défaut: maintenant)")
@click.option("--constraints", default="")
def token_issue(user: str, role_uri: str, issued_at: Optional[int], constraints: str):
    """Émet un jeton et l'écrit sur stdout."""
    secret = get_settings().resolve_secret()
    issued_at = int(time.time()) if issued_at is None else issued_at
    try:
        click.echo(format_token(issue_token(secret, user, role_uri, issued_at, constraints)))
    except ActorError as e:
        return _fail(e)
    return ExitCode.OK


@token.command("verify")
@click.option("--token-file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--window", type=click.IntRange(min=1), default=None, help="Fenêtre en secondes (défaut: configuration)")
@click.option("--now", type=click.IntRange(min=0), default=None, help="Instant de vérification (défaut: maintenant)")
def token_verify(token_file: str, window: Optional[int], now: Optional[int]):
    """Vérifie un jeton; le code d'erreur part sur stderr."""
    settings = get_settings()
    secret = settings.resolve_secret()
    now = int(time.time()) if now is None else now
    try:
        parsed = parse_token(Path(token_file).read_text(encoding="utf-8"))
        verify_token(secret, parsed, now, window or settings.actor_window_secs)
    except ActorError as e:
        click.echo(e.code, err=True)
        return ExitCode.INVALID
    click.echo("ok")
    return ExitCode.OK


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Exécute la CLI et retourne le code de sortie sans quitter le processus."""
    args: List[str] = list(sys.argv[1:] if argv is None else argv)
    try:
        result = cli.main(args=args, prog_name="prbac", standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return int(ExitCode.USAGE)
    except click.ClickException as e:
        e.show()
        return int(ExitCode.INVALID)
    return int(result or ExitCode.OK)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

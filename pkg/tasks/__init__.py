import ast
import pathlib
import shutil

import invoke
import parver


ROOT = pathlib.Path(__file__).resolve().parent.parent

PACKAGE_NAME = 'fluxquanta'

INIT_PY = ROOT.joinpath('src', PACKAGE_NAME, '__init__.py')

BENCH_DIR = ROOT.joinpath('bench')

REL_TYPES = ('major', 'minor', 'patch',)


@invoke.task()
def clean(ctx):
    """Remove built artifacts and benchmark output.
    """
    for name in ('dist', 'build', 'bench-results'):
        path = ROOT.joinpath(name)
        if path.exists():
            print(f'[clean] Removing {path}')
            shutil.rmtree(str(path))


def _read_version():
    with INIT_PY.open() as f:
        for line in f:
            if line.startswith('__version__ = '):
                value = ast.literal_eval(line.split('=', 1)[-1].strip())
                return parver.Version.parse(value)
    raise invoke.Exit(f'no __version__ in {INIT_PY}', code=1)


def _write_version(v):
    text = INIT_PY.read_text()
    old = f'__version__ = {str(_read_version())!r}'
    with INIT_PY.open('w', newline='\n') as f:
        f.write(text.replace(old, f'__version__ = {str(v)!r}'))


@invoke.task()
def bump(ctx, type_='patch', dev=False):
    """Bump the package version; ``--dev`` starts the next dev cycle.
    """
    if type_ not in REL_TYPES:
        raise invoke.Exit(f'{type_} not in {REL_TYPES}', code=1)
    prev_version = _read_version()
    if dev:
        next_version = prev_version.bump_release(index=REL_TYPES.index(type_)).bump_dev()
    elif prev_version.is_prerelease:
        next_version = prev_version.base_version()
    else:
        next_version = prev_version.base_version().bump_release(index=REL_TYPES.index(type_))
    print(f'[bump] {prev_version} -> {next_version}')
    _write_version(next_version)


@invoke.task(pre=[clean])
def build(ctx):
    ctx.run('python -m build')


@invoke.task()
def test(ctx, workers='auto'):
    ctx.run(f'pytest -n {workers} --cov=fluxquanta')


@invoke.task()
def bench(ctx, out='bench-results', command='simulate'):
    """Run every shipped benchmark config through one command.
    """
    configs = sorted(BENCH_DIR.glob('*.toml'))
    print(f'[bench] {len(configs)} configs -> {out}')
    failed = []
    for config in configs:
        print(f'[bench] {command} {config.name}')
        result = ctx.run(
            f'python -m fluxquanta {command} --config "{config}" --out "{out}"',
            warn=True,
        )
        if result.exited:
            failed.append(config.name)
    if failed:
        raise invoke.Exit(f'[bench] failed: {", ".join(failed)}', code=1)

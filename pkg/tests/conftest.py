import pathlib

import pytest

CORPUS = pathlib.Path(__file__).parent / "corpus"


@pytest.fixture(scope="session")
def corpus_dir() -> pathlib.Path:
    return CORPUS


@pytest.fixture(scope="session")
def test_swap_src() -> str:
    return (CORPUS / "sym" / "test_swap.wat").read_text()


def corpus_files(sub: str) -> list[pathlib.Path]:
    return sorted((CORPUS / sub).glob("*.wat"))

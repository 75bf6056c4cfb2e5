import pytest

from limelle.backends import MockClassifier, MockEmbedder, MockLlm
from limelle.generation import GenerationPolicy, PromptSpec
from limelle.sampling import SamplingConfig
from limelle.surrogate import ExplainConfig, make_instance

SENTIMENT = ("negative", "positive")
LEXICON = {
    "bad": (2.0, 0.0), "terrible": (3.0, 0.0), "awful": (3.0, 0.0),
    "good": (0.0, 2.0), "great": (0.0, 3.0), "fine": (0.0, 1.0),
}
NEUTRAL_WORDS = ("film", "show", "story", "thing")
BOUNDARY_WORDS = {"positive": ("great", "good"), "negative": ("terrible", "bad")}


@pytest.fixture
def spec():
    return PromptSpec("Movie review sentences; the label is the sentiment.", SENTIMENT)


@pytest.fixture
def classifier():
    return MockClassifier(LEXICON)


@pytest.fixture
def llm():
    return MockLlm(NEUTRAL_WORDS, BOUNDARY_WORDS)


@pytest.fixture
def embedder():
    return MockEmbedder()


@pytest.fixture
def instance(classifier):
    return make_instance("r1", "the movie was terrible and the plot was thin", classifier, label_names=SENTIMENT)


@pytest.fixture
def explain_config(spec):
    return ExplainConfig(spec, SamplingConfig(seed=7), GenerationPolicy())


# acceptance results, printed as one line each at the end of the session
ACCEPTANCE: list[tuple[int, str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  [{number}] {title}: {detail}")

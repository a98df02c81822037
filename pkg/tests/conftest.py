import numpy as np
import pytest
from hypothesis import strategies as st

from pseudostutter.disfluency import AugmentationConfig, DisfluencyKind

# normalized Indonesian-ish vocabulary, with reduplications, digits and
# tokens the syllabifier rejects
VOCAB = (
    "saya mau makan nasi goreng terus kenapa kamu tidak datang kemarin rumah itu "
    "terletak di dekat pasar ikan jadi kita berangkat besok pagi aku sudah membaca "
    "buku dua kali sebentar lagi hujan akan turun mereka saling menghormati satu sama "
    "lain tolong tutup pintunya angin sangat kencang kota ini punya taman yang indah "
    "masyarakat bertanya ngarai pulau strategi instruksi akhir bunyi lalu nah tapi "
    "anak-anak sapi-sapi kota-kota berandai-andai kotak-kotak 2024 covid-19 hmm brr"
).split()


def random_sentences(seed: int, count: int, max_len: int = 12) -> list[str]:
    rng = np.random.default_rng(seed)
    lengths = rng.integers(1, max_len + 1, size=count)
    return [" ".join(rng.choice(VOCAB, size=n)) for n in lengths]


sentences = st.lists(st.sampled_from(VOCAB), min_size=1, max_size=14).map(" ".join)


@st.composite
def configs(draw):
    weights = {k.value: draw(st.sampled_from([0.0, 0.5, 1.0, 3.0])) for k in DisfluencyKind}
    if not any(weights.values()):
        weights[draw(st.sampled_from(list(DisfluencyKind))).value] = 1.0
    lo = draw(st.integers(1, 3))
    plo = draw(st.integers(2, 4))
    return AugmentationConfig(
        p_disfluency=draw(st.floats(0.0, 1.0)),
        kind_weights=weights,
        repetition_copies=(lo, lo + draw(st.integers(0, 2))),
        prolongation_length=(plo, plo + draw(st.integers(0, 2))),
        prolongation_final_share=draw(st.floats(0.0, 1.0)),
        filler_surface=draw(st.sampled_from(["raw", "normalized"])),
        seed=draw(st.integers(0, 2**64 - 1)),
    )


@pytest.fixture
def sample_tsv(tmp_path):
    from pseudostutter.pipeline import sample_corpus_path

    return sample_corpus_path()


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)

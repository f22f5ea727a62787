"""Synthetic corpus generator: rates, structure, determinism, learnability."""

from __future__ import annotations

from collections import Counter

import pytest

from uttlabel.corpus import parse_transcripts, load_taxonomy
from uttlabel.synth import SynthSpec, generate_synthetic_corpus, write_synthetic_corpus


class TestSpecValidation:
    def test_defaults_are_valid(self):
        spec = SynthSpec()
        assert spec.size == 5000
        assert spec.rate_two == 0.24
        assert spec.rate_three == 0.12

    def test_bad_rates_rejected(self):
        with pytest.raises(ValueError):
            SynthSpec(rate_two=0.7, rate_three=0.5)  # sum > 1
        with pytest.raises(ValueError):
            SynthSpec(rate_two=-0.1)

    def test_bad_size_rejected(self):
        with pytest.raises(ValueError):
            SynthSpec(size=0)


class TestGeneratedShape:
    def test_exact_size(self):
        corpus, _ = generate_synthetic_corpus(SynthSpec(size=777), seed=0)
        assert corpus.n_utterances == 777

    def test_label_count_rates_at_scale(self):
        spec = SynthSpec(size=5000)
        corpus, _ = generate_synthetic_corpus(spec, seed=1)
        counts = Counter(len(u.fine_labels) for u in corpus.iter_utterances())
        total = corpus.n_utterances
        assert counts[2] / total == pytest.approx(0.24, abs=0.02)
        assert counts[3] / total == pytest.approx(0.12, abs=0.02)
        assert set(counts) <= {1, 2, 3}

    def test_taxonomy_covers_corpus(self):
        spec = SynthSpec(size=300)
        corpus, taxonomy = generate_synthetic_corpus(spec, seed=2)
        assert corpus.label_inventory <= taxonomy.fine_label_set
        assert len(taxonomy.fine_labels("EMO")) == spec.n_fine_emo
        assert len(taxonomy.fine_labels("COG")) == spec.n_fine_cog
        assert len(taxonomy.coarse_classes("EMO")) == 8
        assert len(taxonomy.coarse_classes("COG")) == 8

    def test_labels_share_top_category(self):
        corpus, taxonomy = generate_synthetic_corpus(SynthSpec(size=800), seed=3)
        for utt in corpus.iter_utterances():
            tops = {taxonomy.top(lab) for lab in utt.fine_labels}
            assert len(tops) == 1

    def test_emo_fraction_near_target(self):
        spec = SynthSpec(size=5000)
        corpus, taxonomy = generate_synthetic_corpus(spec, seed=4)
        emo = sum(
            1
            for u in corpus.iter_utterances()
            if taxonomy.top(next(iter(u.fine_labels))) == "EMO"
        )
        assert emo / corpus.n_utterances == pytest.approx(0.1724, abs=0.03)

    def test_session_lengths_in_bounds(self):
        spec = SynthSpec(size=1000, min_session=15, max_session=30)
        corpus, _ = generate_synthetic_corpus(spec, seed=5)
        lengths = [len(utts) for _, utts in corpus.sessions]
        # the final session may be truncated by the corpus size cap
        assert all(15 <= n <= 30 for n in lengths[:-1])
        assert lengths[-1] <= 30

    def test_stickiness_creates_runs(self):
        # consecutive same-top pairs must clearly exceed the independence rate
        spec = SynthSpec(size=4000, stickiness=0.6)
        corpus, taxonomy = generate_synthetic_corpus(spec, seed=6)
        same = total = 0
        for _, utts in corpus.sessions:
            tops = [taxonomy.top(next(iter(u.fine_labels))) for u in utts]
            for a, b in zip(tops, tops[1:]):
                same += a == b
                total += 1
        p_emo = 0.1724
        independent = p_emo**2 + (1 - p_emo) ** 2
        assert same / total > independent + 0.05


class TestDeterminismAndFiles:
    def test_same_seed_identical(self):
        a, _ = generate_synthetic_corpus(SynthSpec(size=400), seed=9)
        b, _ = generate_synthetic_corpus(SynthSpec(size=400), seed=9)
        assert a == b

    def test_different_seed_differs(self):
        a, _ = generate_synthetic_corpus(SynthSpec(size=400), seed=1)
        b, _ = generate_synthetic_corpus(SynthSpec(size=400), seed=2)
        assert a != b

    def test_written_files_parse_back(self, tmp_path):
        spec = SynthSpec(size=250)
        t_path, x_path = write_synthetic_corpus(spec, 7, tmp_path)
        corpus = parse_transcripts(t_path)
        taxonomy = load_taxonomy(x_path)
        direct_corpus, direct_tax = generate_synthetic_corpus(spec, 7)
        assert corpus == direct_corpus
        assert taxonomy == direct_tax

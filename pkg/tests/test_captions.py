"""Tests for pseudo captions and sentence omission."""

import pytest

from midiforge.captions import (
    OMIT_PROBABILITY, Caption, attribute_values, default_templates, load_templates, omit_sentences, plan_omission,
    render_pseudo_caption, split_sentences,
)
from midiforge.errors import ConfigError
from midiforge.models import AttributeSet, Key, Mode

ATTRS = AttributeSet(bpm=120.4, time_signature=(4, 4), key=Key(0, Mode.MAJOR), instruments=["violin", "english horn"])


class TestTemplates:
    def test_ten_templates(self):
        templates = default_templates()
        assert [t.id for t in templates] == list(range(10))

    def test_first_template(self):
        caption = render_pseudo_caption(ATTRS, template_id=0)
        assert caption.text == (
            "Played at 120 beats per minute in 4/4 time signature and the key of C major, "
            "classical piece with the following instruments: English horn and violin."
        )

    def test_every_template_names_every_attribute(self):
        values = attribute_values(ATTRS)
        for template in default_templates():
            text = render_pseudo_caption(ATTRS, template_id=template.id).text
            for value in values.values():
                assert value in text

    def test_seed_picks_template(self):
        a = render_pseudo_caption(ATTRS, rng_seed=3)
        assert render_pseudo_caption(ATTRS, rng_seed=3) == a
        texts = {render_pseudo_caption(ATTRS, rng_seed=s).text for s in range(50)}
        assert len(texts) > 1

    def test_bad_template_id(self):
        with pytest.raises(ValueError):
            render_pseudo_caption(ATTRS, template_id=10)

    def test_no_instruments(self):
        attrs = AttributeSet(instruments=[])
        assert attribute_values(attrs)["instruments"] == "none"

    def test_template_must_use_each_placeholder(self, tmp_path):
        path = tmp_path / "t.yaml"
        path.write_text('templates:\n  - id: 0\n    pattern: "{bpm} {time_signature} {instruments}"\n')
        with pytest.raises(ConfigError):
            load_templates(path)

    def test_template_ids_must_be_contiguous(self, tmp_path):
        path = tmp_path / "t.yaml"
        path.write_text('templates:\n  - id: 1\n    pattern: "{bpm} {time_signature} {key} {instruments}"\n')
        with pytest.raises(ConfigError):
            load_templates(path)


class TestSentences:
    def test_split(self):
        caption = Caption.from_text("One. Two! Three?")
        assert caption.sentence_texts() == ["One.", "Two!", "Three?"]

    def test_split_empty(self):
        assert split_sentences("   ") == []

    def test_single_sentence(self):
        assert Caption.from_text("Just one sentence").sentence_texts() == ["Just one sentence"]


class TestOmission:
    def test_fraction_bounds(self):
        for n in range(1, 11):
            for seed in range(200):
                removed = plan_omission(n, seed)
                if removed is None:
                    continue
                if n == 1:
                    assert removed == []
                    continue
                assert -(-n // 5) <= len(removed) <= n // 2
                assert removed == sorted(set(removed))
                assert all(0 <= i < n for i in removed)

    def test_probability_is_one_half(self):
        draws = 100_000
        drawn = sum(plan_omission(5, seed) is not None for seed in range(draws))
        assert drawn / draws == pytest.approx(OMIT_PROBABILITY, abs=0.01)
        assert OMIT_PROBABILITY == 0.5

    def test_omit_keeps_order(self):
        caption = Caption.from_text("A one. B two. C three. D four. E five.")
        sentences = caption.sentence_texts()
        for seed in range(50):
            kept = omit_sentences(caption, seed).sentence_texts()
            assert 3 <= len(kept) <= 5
            assert [s for s in sentences if s in kept] == kept

    def test_deterministic(self):
        caption = render_pseudo_caption(ATTRS, template_id=8)
        assert omit_sentences(caption, 9) == omit_sentences(caption, 9)

    def test_single_sentence_never_cut(self):
        caption = render_pseudo_caption(ATTRS, template_id=0)
        for seed in range(20):
            assert omit_sentences(caption, seed).text == caption.text

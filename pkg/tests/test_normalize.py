import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codeorigin.normalize import (
    AugmentConfig,
    augment,
    drop_header,
    mask_literals,
    normalize_code,
    sample_rng,
    sample_training_chunk,
    strip_comments,
)

code_text = st.text(alphabet=st.sampled_from(list("ab1 \t\n`#/*\"'.=()xy_09")), max_size=120)


class TestNormalizeCode:
    def test_fence_removed(self):
        assert normalize_code("```python\nx=1\n```") == "x=1"

    def test_tabs_trailing_and_blank_runs(self):
        assert normalize_code("a\tb  \n\n\n\n\nc") == "a    b\n\n\nc"

    def test_normalized_text_unchanged(self):
        text = "def f():\n    return 1\n\n\nprint(f())"
        assert normalize_code(text) == text

    def test_mid_file_fences_unwrapped(self):
        assert normalize_code("a\n```c++\nb\n```\nc") == "a\nb\nc"

    def test_inline_backticks_kept(self):
        assert normalize_code("x = `cmd` ```") == "x = `cmd` ```"

    @settings(max_examples=300)
    @given(code_text)
    def test_idempotent_and_clean(self, text):
        out = normalize_code(text)
        assert normalize_code(out) == out
        assert "\t" not in out
        assert all(line == line.rstrip() for line in out.split("\n"))
        assert "\n\n\n\n" not in out


class TestStripComments:
    def test_line_comment(self):
        assert strip_comments("x = 1 // init") == "x = 1 "

    def test_hash_line(self):
        assert strip_comments("  # only a comment\ny=2") == "y=2"

    def test_no_markers(self):
        assert strip_comments("a = b + c;\nreturn a;") == "a = b + c;\nreturn a;"

    def test_block_comment_across_lines(self):
        assert strip_comments("a /* one\ntwo */b") == "a b"

    def test_slashes_inside_string_kept(self):
        line = 'url = "http://x.org" // site'
        assert strip_comments(line) == 'url = "http://x.org" '

    def test_inline_hash_kept(self):
        assert strip_comments("x = 1 # c") == "x = 1 # c"

    @settings(max_examples=300)
    @given(code_text)
    def test_never_grows(self, text):
        assert len(strip_comments(text)) <= len(text)


class TestMaskLiterals:
    def test_string_and_number(self):
        assert mask_literals('print("hi", 42)') == "print(<STR>, <NUM>)"

    def test_identifier_digits_untouched(self):
        assert mask_literals("v2 = x3") == "v2 = x3"

    def test_no_literals(self):
        assert mask_literals("a = b") == "a = b"

    @pytest.mark.parametrize("text,expected", [
        ("x = 3.14e-2", "x = <NUM>"),
        ("y = 0xFF", "y = <NUM>"),
        ("s = 'it''s'", "s = <STR><STR>"),
        ("utf8 = 'a\\'b'", "utf8 = <STR>"),
        ("a.b1 + 7", "a.b1 + <NUM>"),
        ('"unterminated\nx', '"unterminated\nx'),
    ])
    def test_token_oracle(self, text, expected):
        assert mask_literals(text) == expected


class TestDropHeader:
    def test_imports_removed(self):
        assert drop_header("import os\nimport re\n\ndef f(): pass") == "def f(): pass"

    def test_code_first_unchanged(self):
        text = "x = 1\nimport os"
        assert drop_header(text) == text

    def test_cap(self):
        text = "\n".join(f"import m{i}" for i in range(60)) + "\nrun()"
        out = drop_header(text, 40).split("\n")
        assert len(out) == 21
        assert out[0] == "import m40"

    def test_license_and_docstring(self):
        text = '/*\n * License\n */\n#include <stdio.h>\n"""doc\nmore"""\nint main() {}'
        assert drop_header(text) == "int main() {}"

    def test_zero_lines(self):
        assert drop_header("import os\nx", 0) == "import os\nx"

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            drop_header("x", -1)

    @settings(max_examples=200)
    @given(code_text, st.integers(0, 50))
    def test_never_grows(self, text, n):
        assert len(drop_header(text, n)) <= len(text)


class TestAugment:
    def test_zero_probabilities_identity(self):
        cfg = AugmentConfig(0.0, 0.0, 0.0)
        rng = np.random.default_rng(0)
        for text in ["import os\nx = 1 // c", "'a' 1", ""]:
            assert augment(text, cfg, rng) == text

    def test_all_ones_composes_in_order(self):
        text = "import os\nx = 1 # c\ns='a'"
        cfg = AugmentConfig(1.0, 1.0, 1.0)
        expected = drop_header(mask_literals(strip_comments(text)), 40)
        assert augment(text, cfg, np.random.default_rng(0)) == expected
        assert expected == "x = <NUM> # c\ns=<STR>"

    def test_deterministic(self):
        cfg = AugmentConfig(0.5, 0.5, 0.5)
        text = "import os\n// hi\nx = 'a' + 2"
        a = [augment(text, cfg, sample_rng(7, f"id{i}")) for i in range(50)]
        b = [augment(text, cfg, sample_rng(7, f"id{i}")) for i in range(50)]
        assert a == b
        assert len(set(a)) > 1

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            AugmentConfig(p_comment_strip=1.5)
        with pytest.raises(ValueError):
            AugmentConfig(header_max_lines=-1)


class TestTrainingChunk:
    def test_exact_length(self):
        assert sample_training_chunk("abcd", 4, np.random.default_rng(0)) == "abcd"

    def test_short_text(self):
        assert sample_training_chunk("abc", 10, np.random.default_rng(0)) == "abc"

    def test_start_distribution(self):
        chunk = 100
        text = "".join(chr(0x4E00 + i) for i in range(10 * chunk))
        rng = np.random.default_rng(1234)
        starts = np.array([text.index(sample_training_chunk(text, chunk, rng)[0]) for _ in range(10_000)])
        last = len(text) - chunk
        # The uniform branch lands on 0 or ``last`` with probability 2 / 901 * 0.3, well inside tolerance.
        assert np.mean(starts == 0) == pytest.approx(0.50, abs=0.02)
        assert np.mean(starts == last) == pytest.approx(0.20, abs=0.02)

    def test_window_is_contiguous(self):
        text = "".join(chr(65 + i % 26) for i in range(500))
        rng = np.random.default_rng(5)
        for _ in range(100):
            out = sample_training_chunk(text, 50, rng)
            assert len(out) == 50 and out in text

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            sample_training_chunk("abc", 0, np.random.default_rng(0))

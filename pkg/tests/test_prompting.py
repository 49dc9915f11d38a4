import pytest

from conftest import make_chunk
from reqfusion.prompting import (
    DOC_CLOSE,
    DOC_OPEN,
    GENERIC_INSTRUCTION,
    PEGS_FOCUS,
    PromptMode,
    PromptTemplates,
    build_generic_prompt,
    build_pegs_prompt,
    plan_prompts,
)
from reqfusion.types import PEGS_ORDER, PegsCategory


def delimited_region(rendered: str) -> str:
    return rendered.split(DOC_OPEN, 1)[1].rsplit(DOC_CLOSE, 1)[0].strip("\n")


class TestPegsPrompt:
    def test_project_prompt_contains_focus_row(self):
        spec = build_pegs_prompt(PegsCategory.PROJECT, make_chunk())
        assert "Stakeholders, constraints (budget, timeline), organizational context" in spec.rendered
        assert "Project" in spec.rendered

    def test_system_prompt_contains_focus_row(self):
        spec = build_pegs_prompt(PegsCategory.SYSTEM, make_chunk())
        assert "Functional specs, non-functional requirements, quality attributes" in spec.rendered
        assert "System" in spec.rendered

    def test_all_focus_rows(self):
        expected = {
            PegsCategory.PROJECT: "Stakeholders, constraints (budget, timeline), organizational context",
            PegsCategory.ENVIRONMENT: "External interfaces, regulatory constraints, operational conditions",
            PegsCategory.GOALS: "Business objectives, success criteria, user expectations",
            PegsCategory.SYSTEM: "Functional specs, non-functional requirements, quality attributes",
        }
        assert PEGS_FOCUS == expected

    def test_deterministic_rendering(self):
        chunk = make_chunk()
        a = build_pegs_prompt(PegsCategory.GOALS, chunk)
        b = build_pegs_prompt(PegsCategory.GOALS, chunk)
        assert a.rendered == b.rendered

    def test_empty_chunk_rejected(self):
        with pytest.raises(ValueError):
            build_pegs_prompt(PegsCategory.GOALS, make_chunk(text=""))


class TestGenericPrompt:
    def test_contains_verbatim_instruction(self):
        spec = build_generic_prompt(make_chunk())
        assert GENERIC_INSTRUCTION in spec.rendered
        assert GENERIC_INSTRUCTION == (
            "Extract all functional and non-functional requirements from this document."
        )

    def test_default_schema_block_present(self):
        spec = build_generic_prompt(make_chunk())
        assert '"pegs"' in spec.rendered
        assert '"confidence"' in spec.rendered

    def test_prompts_differ_only_in_delimited_region(self):
        c1 = make_chunk(text="First chunk body for the prompt.", chunk_id="c1")
        c2 = make_chunk(text="Second, different chunk body.", chunk_id="c2")
        r1, r2 = build_generic_prompt(c1).rendered, build_generic_prompt(c2).rendered
        assert r1.split(DOC_OPEN, 1)[0] == r2.split(DOC_OPEN, 1)[0]
        assert r1.rsplit(DOC_CLOSE, 1)[1] == r2.rsplit(DOC_CLOSE, 1)[1]
        assert delimited_region(r1) != delimited_region(r2)


class TestChunkInsertion:
    def test_chunk_text_between_sentinels_unmodified(self):
        text = "The supplier shall deliver spare parts.\n\nSecond paragraph."
        chunk = make_chunk(text=text)
        for spec in [
            build_generic_prompt(chunk),
            build_pegs_prompt(PegsCategory.ENVIRONMENT, chunk),
        ]:
            assert delimited_region(spec.rendered) == text
            assert spec.rendered.count(DOC_OPEN) == 1
            assert spec.rendered.count(DOC_CLOSE) == 1


class TestPlanPrompts:
    def test_pegs_mode_fans_out_four_per_chunk(self):
        chunks = [make_chunk(chunk_id=f"c{i}", text=f"body {i}") for i in range(3)]
        prompts = plan_prompts(chunks, PromptMode.PEGS_GUIDED)
        assert len(prompts) == 12
        # Order: chunk-major, categories in canonical order within a chunk.
        assert [p.chunk_id for p in prompts[:4]] == ["c0"] * 4
        assert [p.category for p in prompts[:4]] == list(PEGS_ORDER)

    def test_generic_mode_one_per_chunk(self):
        chunks = [make_chunk(chunk_id=f"c{i}", text=f"body {i}") for i in range(3)]
        assert len(plan_prompts(chunks, PromptMode.GENERIC)) == 3

    def test_empty_plan(self):
        assert plan_prompts([], PromptMode.PEGS_GUIDED) == []

    def test_pegs_plan_covers_all_categories_once_per_chunk(self):
        chunks = [make_chunk(chunk_id=f"c{i}", text=f"body {i}") for i in range(5)]
        prompts = plan_prompts(chunks, PromptMode.PEGS_GUIDED)
        for chunk in chunks:
            cats = [p.category for p in prompts if p.chunk_id == chunk.chunk_id]
            assert sorted(cats, key=lambda c: c.value) == sorted(
                PEGS_ORDER, key=lambda c: c.value
            )


class TestTemplateOverride:
    def test_template_dir(self, tmp_path):
        (tmp_path / "pegs.txt").write_text(
            "FOCUS={focus}\nCAT={category}\n{schema}\n<<<DOC\n{chunk}\nDOC>>>"
        )
        templates = PromptTemplates.from_dir(tmp_path)
        spec = build_pegs_prompt(PegsCategory.GOALS, make_chunk(), templates)
        assert spec.rendered.startswith("FOCUS=Business objectives")
        # generic falls back to the default template
        generic = build_generic_prompt(make_chunk(), templates)
        assert GENERIC_INSTRUCTION in generic.rendered

    def test_missing_dir_rejected(self, tmp_path):
        from reqfusion.errors import ConfigError

        with pytest.raises(ConfigError):
            PromptTemplates.from_dir(tmp_path / "nope")

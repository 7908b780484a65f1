import pytest

from retainkv.exceptions import ContractViolation, DataError
from retainkv.retaining import TrainingExample, load_dataset, make_locretq_example, save_dataset, truncate_example


@pytest.fixture
def examples():
    return [
        TrainingExample(prompt=[1, 2, 3], answer=[4]),
        TrainingExample(prompt=[5, 6, 7, 8], answer=[9, 10], query_len=2),
    ]


def test_round_trip(tmp_path, examples):
    path = save_dataset(tmp_path / "d.jsonl", examples)
    assert path.read_text().splitlines()[0] == '{"prompt":[1,2,3],"answer":[4]}'
    assert load_dataset(path) == examples


def test_blank_lines_are_skipped(tmp_path):
    path = tmp_path / "d.jsonl"
    path.write_text('\n{"prompt": [1], "answer": [2]}\n\n')
    assert len(load_dataset(path)) == 1


@pytest.mark.parametrize("line", ['{"prompt": [1]', '{"prompt": [1], "answer": []}', '{"prompt": [1], "answer": [2], "x": 1}'])
def test_malformed_lines_name_the_line(tmp_path, line):
    path = tmp_path / "d.jsonl"
    path.write_text('{"prompt": [1], "answer": [2]}\n' + line + "\n")
    with pytest.raises(DataError, match=":2:"):
        load_dataset(path)


def test_missing_dataset(tmp_path):
    with pytest.raises(DataError):
        load_dataset(tmp_path / "none.jsonl")


def test_truncation_keeps_the_answer(examples):
    cut = truncate_example(examples[0], seq_cap=3)
    assert cut.prompt_tokens == [1, 2]
    assert cut.answer_tokens == [4]
    assert truncate_example(examples[0], 100) is examples[0]
    assert truncate_example(examples[0], 1).prompt_tokens == [1]


@pytest.mark.parametrize(
    ("seq_cap", "prompt", "query_len"),
    [(5, [5, 7, 8], 2), (4, [7, 8], 2), (3, [8], 1)],
)
def test_truncation_cuts_the_context_and_keeps_the_question(examples, seq_cap, prompt, query_len):
    cut = truncate_example(examples[1], seq_cap)
    assert cut.prompt_tokens == prompt
    assert cut.query_len == query_len
    assert cut.answer_tokens == [9, 10]


def test_query_aware_examples_see_the_question_after_truncation(examples):
    cut = truncate_example(examples[1], seq_cap=4)
    assert make_locretq_example(cut, 5).prompt_tokens == [7, 8, 7, 8]


def test_query_aware_examples_prepend_the_query(examples):
    assert make_locretq_example(examples[1], 5).prompt_tokens == [7, 8, 5, 6, 7, 8]
    assert make_locretq_example(examples[0], 1).prompt_tokens == [3, 1, 2, 3]
    assert make_locretq_example(examples[0], 0) is examples[0]
    with pytest.raises(ContractViolation):
        make_locretq_example(examples[0], -1)

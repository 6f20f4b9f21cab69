from __future__ import annotations

import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codemend.errors import GatewayError, UnusableResponseError
from codemend.gateway import (
    CostLedger,
    CostRecord,
    EditRule,
    FlakyProvider,
    Gateway,
    MockFixtureProvider,
    ProviderReply,
    ProviderRequest,
    RetryPolicy,
    ScriptedEditProvider,
    TierRef,
    average_cost_per_issue,
    compute_cost,
    extract_code,
    prompt_hash,
    record_cost,
    validate_schedule,
)
from codemend.issues import FileIssueSet, Issue, IssueCategory
from codemend.prompting import build_prompt, load_example_bank
from codemend.rag import RetrievedContext
from codemend.rational import format_usd, parse_fraction


def tier(name="tier-1", provider="mock", input_price="0.5", output_price="1.5", order=0):
    return TierRef(
        name=name,
        provider_id=provider,
        input_price=parse_fraction(input_price),
        output_price=parse_fraction(output_price),
        order_index=order,
    )


def sample_prompt():
    bank = load_example_bank()
    issues = FileIssueSet(
        "src/a.js",
        (Issue("src/a.js", "a.js", 2, "Remove this commented out code.", IssueCategory.CODE_SMELL),),
    )
    content = "keep\n// dead = 1;\nkeep too\n"
    return build_prompt(content, issues, RetrievedContext.empty(), bank)


class TestTierRef:
    def test_negative_price_rejected(self):
        with pytest.raises(ValueError):
            tier(input_price="-1")

    def test_duplicate_order_index_rejected(self):
        with pytest.raises(ValueError, match="unique"):
            validate_schedule([tier(order=1), tier(name="tier-2", order=1)])

    def test_schedule_sorted_cheap_first(self):
        schedule = validate_schedule([tier(name="later", order=5), tier(name="first", order=1)])
        assert [t.name for t in schedule] == ["first", "later"]


class TestExtractCode:
    def test_fenced_with_label(self):
        assert extract_code("```js\nlet a=1;\n```") == "let a=1;"

    def test_bare_text_unchanged(self):
        text = "plain file body\nwith two lines"
        assert extract_code(text) == text

    def test_two_fences_ambiguous(self):
        with pytest.raises(UnusableResponseError, match="ambiguous"):
            extract_code("```\none\n```\nand\n```\ntwo\n```")

    def test_prose_around_single_fence_left_alone(self):
        text = "Here is the file:\n```\ncode\n```"
        assert extract_code(text) == text

    def test_blank_padding_trimmed(self):
        assert extract_code("```\n\n\ncode line\n\n```") == "code line"

    @given(st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=200))
    @settings(max_examples=200)
    def test_idempotent(self, text):
        try:
            once = extract_code(text)
        except UnusableResponseError:
            return
        assert extract_code(once) == once


class TestCost:
    def test_zero_tokens_zero_cost(self):
        assert compute_cost(0, 0, tier()) == 0

    def test_thousand_each_way(self):
        assert compute_cost(1000, 1000, tier(input_price="0.5", output_price="1.5")) == 2

    def test_record_cost_appends(self):
        ledger = CostLedger()
        record = record_cost((100, 200), tier(), "src/a.js", ledger)
        assert record.cost == Fraction(100, 1000) * Fraction(1, 2) + Fraction(200, 1000) * Fraction(3, 2)
        assert ledger.records() == [record]
        assert ledger.total() == record.cost

    def test_average_cost_display_band(self):
        avg = average_cost_per_issue(Fraction(41, 100), 26)
        assert avg == Fraction(41, 2600)
        assert format_usd(avg, places=3) in ("$0.015", "$0.016")
        assert format_usd(average_cost_per_issue(Fraction(16, 100), 28), places=3) in ("$0.005", "$0.006")
        assert format_usd(average_cost_per_issue(Fraction(8, 100), 29), places=3) == "$0.003"
        assert average_cost_per_issue(Fraction(1), 0) is None

    @given(st.lists(st.tuples(st.integers(0, 5000), st.integers(0, 5000)), max_size=50))
    def test_ledger_additivity(self, usages):
        ledger = CostLedger()
        records = [record_cost(usage, tier(), f"f{i}", ledger) for i, usage in enumerate(usages)]
        assert ledger.total() == sum((r.cost for r in records), Fraction(0))

    def test_cost_record_roundtrip(self):
        record = record_cost((123, 456), tier(), "src/a.js")
        assert CostRecord.from_dict(record.to_dict()) == record


class TestProviders:
    def test_mock_fixture_provider(self, tmp_path):
        prompt = sample_prompt()
        key = MockFixtureProvider.key_for(prompt)
        (tmp_path / f"{key}.json").write_text(
            json.dumps({"text": "fixed body", "input_tokens": 11, "output_tokens": 7})
        )
        gateway = Gateway({"mock": MockFixtureProvider(tmp_path)}, requests_per_minute=0)
        response = gateway.submit(prompt, tier(), RetryPolicy(max_retries=0))
        assert response.raw_text == "fixed body"
        assert response.usage == (11, 7)

    def test_mock_missing_fixture_is_unusable(self, tmp_path):
        gateway = Gateway({"mock": MockFixtureProvider(tmp_path)}, requests_per_minute=0)
        with pytest.raises(UnusableResponseError):
            gateway.submit(sample_prompt(), tier(), RetryPolicy(max_retries=2))

    def test_mock_determinism_identical_ledgers(self, tmp_path):
        prompt = sample_prompt()
        key = MockFixtureProvider.key_for(prompt)
        (tmp_path / f"{key}.json").write_text(
            json.dumps({"text": "fixed", "input_tokens": 5, "output_tokens": 5})
        )

        def run_once():
            ledger = CostLedger()
            gateway = Gateway(
                {"mock": MockFixtureProvider(tmp_path)}, ledger=ledger, requests_per_minute=0
            )
            response = gateway.submit(prompt, tier(), RetryPolicy(max_retries=0))
            record_cost(response.usage, tier(), "src/a.js", ledger)
            return [r.to_dict() for r in ledger.records()]

        assert run_once() == run_once()

    def test_scripted_provider_applies_rules(self):
        provider = ScriptedEditProvider([EditRule(match="// dead")])
        reply = provider.complete(
            ProviderRequest(
                system_text=sample_prompt().system_text,
                user_text=sample_prompt().user_text,
                model="scripted",
            )
        )
        assert extract_code(reply.text) == "keep\nkeep too"
        assert reply.input_tokens > 0 and reply.output_tokens > 0

    def test_scripted_replace_rule(self):
        rule = EditRule(match="eval(", action="replace-line", replacement="run_sandboxed(data);")
        assert rule.apply(["a", "eval(data);", "b"]) == ["a", "run_sandboxed(data);", "b"]

    def test_prompt_hash_stable(self):
        assert prompt_hash(sample_prompt()) == prompt_hash(sample_prompt())


class EchoProvider:
    def complete(self, request: ProviderRequest) -> ProviderReply:
        return ProviderReply(text="ok", input_tokens=1, output_tokens=1)


class TestRetry:
    def test_two_failures_then_success_is_three_attempts(self):
        flaky = FlakyProvider(EchoProvider(), failures=2)
        gateway = Gateway({"mock": flaky}, requests_per_minute=0)
        policy = RetryPolicy(max_retries=3, base_delay=0.0, sleep=lambda _: None)
        response = gateway.submit(sample_prompt(), tier(), policy)
        assert response.raw_text == "ok"
        assert flaky.calls == 3

    def test_four_failures_exhaust_three_retries(self):
        flaky = FlakyProvider(EchoProvider(), failures=4)
        gateway = Gateway({"mock": flaky}, requests_per_minute=0)
        policy = RetryPolicy(max_retries=3, base_delay=0.0, sleep=lambda _: None)
        with pytest.raises(GatewayError) as excinfo:
            gateway.submit(sample_prompt(), tier(), policy)
        assert not isinstance(excinfo.value, UnusableResponseError)
        assert flaky.calls == 4
        assert excinfo.value.tier == "tier-1"
        assert excinfo.value.file_location == "src/a.js"

    def test_unknown_provider(self):
        gateway = Gateway({}, requests_per_minute=0)
        with pytest.raises(GatewayError, match="no provider registered"):
            gateway.submit(sample_prompt(), tier(provider="ghost"), RetryPolicy(max_retries=0))

    def test_ambiguous_reply_is_unusable(self):
        class TwoFenceProvider:
            def complete(self, request):
                return ProviderReply(
                    text="```\na\n```\nmiddle\n```\nb\n```", input_tokens=1, output_tokens=1
                )

        gateway = Gateway({"mock": TwoFenceProvider()}, requests_per_minute=0)
        with pytest.raises(UnusableResponseError, match="unusable response"):
            gateway.submit(sample_prompt(), tier(), RetryPolicy(max_retries=0))

    def test_backoff_delays_grow(self):
        policy = RetryPolicy(max_retries=4, base_delay=0.5, max_delay=3.0)
        delays = [policy.delay_for(i) for i in range(4)]
        assert delays == [0.5, 1.0, 2.0, 3.0]

    def test_negative_usage_rejected(self):
        with pytest.raises(ValueError):
            ProviderReply(text="x", input_tokens=-1, output_tokens=0)

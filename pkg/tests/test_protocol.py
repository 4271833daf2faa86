"""Webhook wire protocol: parsing, serialization, round trips."""

from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from flowfill import jsontree, protocol
from flowfill.protocol import (
    ActionResponse,
    MalformedBody,
    MissingField,
    TypeMismatch,
    attachment_response,
    buttons_response,
    custom_response,
    image_response,
    parse_action_request,
    parse_action_response,
    serialize_action_response,
    serialize_error,
    slot_set,
    text_response,
)


class TestParseActionRequest:
    def test_demo_shape(self):
        body = (b'{"next_action":"action_weather","sender_id":"u1",'
                b'"tracker":{"sender_id":"u1","slots":{"location":"Berlin"}}}')
        req = parse_action_request(body)
        assert req.next_action == "action_weather"
        assert req.tracker.slots == {"location": "Berlin"}

    def test_minimal_request_has_empty_slots(self):
        req = parse_action_request(b'{"next_action":"x","sender_id":"s","tracker":{"slots":{}}}')
        assert req.tracker.slots == {}

    def test_absent_slots_map_parses_as_empty(self):
        req = parse_action_request(b'{"next_action":"x","sender_id":"s","tracker":{}}')
        assert req.tracker.slots == {}

    def test_missing_next_action(self):
        with pytest.raises(MissingField) as exc:
            parse_action_request(b'{"tracker":{}}')
        assert exc.value.path == "next_action"

    def test_not_json(self):
        with pytest.raises(MalformedBody):
            parse_action_request(b"not json")

    def test_slots_not_a_map(self):
        with pytest.raises(TypeMismatch) as exc:
            parse_action_request(b'{"next_action":"x","sender_id":"s","tracker":{"slots":[1]}}')
        assert exc.value.path == "tracker.slots"

    def test_extra_fields_preserved_in_raw(self):
        body = (b'{"next_action":"x","sender_id":"s","tracker":{"slots":{}},'
                b'"version":"3.0","domain":{"anything":[1,2]}}')
        req = parse_action_request(body)
        assert req.version == "3.0"
        assert req.raw["domain"] == {"anything": [1, 2]}

    def test_raw_reparses_to_canonical_form(self):
        body = b'{"next_action":"x","sender_id":"s","tracker":{"slots":{"n":1.50}},"extra":true}'
        req = parse_action_request(body)
        canonical = jsontree.dump_bytes(req.raw, sort_keys=True)
        reparsed = parse_action_request(canonical)
        assert jsontree.dump_bytes(reparsed.raw, sort_keys=True) == canonical


class TestSerializeActionResponse:
    def test_empty_response(self):
        assert serialize_action_response(ActionResponse()) == b'{"events":[],"responses":[]}'

    def test_slot_clear_event(self):
        resp = ActionResponse(events=(slot_set("location", None),))
        assert serialize_action_response(resp) == (
            b'{"events":[{"event":"slot","name":"location","value":null}],"responses":[]}'
        )

    def test_buttons_structure(self):
        resp = ActionResponse(responses=(
            buttons_response("Which info would you like?", [("Weather", "/ask_weather")]),
        ))
        tree = jsontree.loads(serialize_action_response(resp))
        assert tree["responses"][0]["buttons"][0]["title"] == "Weather"
        assert tree["responses"][0]["buttons"][0]["payload"] == "/ask_weather"

    def test_deterministic_bytes(self):
        resp = ActionResponse(
            events=(slot_set("a", Decimal("2.50")),),
            responses=(text_response("hi"), image_response("http://x/y.png")),
        )
        assert serialize_action_response(resp) == serialize_action_response(resp)


class TestSerializeError:
    def test_both_fields_verbatim(self):
        body = serialize_error("action_unknown", "no flow branch handles this action")
        assert jsontree.loads(body) == {
            "action_name": "action_unknown",
            "error": "no flow branch handles this action",
        }

    def test_empty_action_name_allowed(self):
        assert jsontree.loads(serialize_error("", "empty action"))["action_name"] == ""

    def test_echoes_failing_action(self):
        tree = jsontree.loads(serialize_error("action_weather", "upstream API timeout"))
        assert tree["action_name"] == "action_weather"


class TestInvariants:
    def test_text_response_rejects_extra_fields(self):
        with pytest.raises(ValueError):
            protocol.BotResponse(kind=protocol.ResponseKind.TEXT, text="x", media="y")

    def test_buttons_require_nonempty_titles(self):
        with pytest.raises(ValueError):
            buttons_response("t", [("", "/p")])

    def test_slot_event_requires_name(self):
        with pytest.raises(ValueError):
            slot_set("", 1)


# Generator covering all five response kinds and slot events with
# null/string/number/nested values.

slot_values = st.one_of(
    st.none(),
    st.text(max_size=12),
    st.integers(min_value=-1000, max_value=1000),
    st.decimals(allow_nan=False, allow_infinity=False, places=2),
    st.fixed_dictionaries({"nested": st.lists(st.integers(max_value=9), max_size=3)}),
)

events = st.builds(slot_set, st.text(min_size=1, max_size=10), slot_values)

responses = st.one_of(
    st.builds(text_response, st.text(max_size=30)),
    st.builds(
        buttons_response,
        st.text(max_size=20),
        st.lists(st.tuples(st.text(min_size=1, max_size=8), st.text(max_size=8)),
                 min_size=1, max_size=3),
    ),
    st.builds(image_response, st.text(max_size=30)),
    st.builds(attachment_response, st.text(max_size=30)),
    # a custom response carries a payload; null would be indistinguishable
    # from "not set", so construction forbids it
    st.builds(custom_response, slot_values.filter(lambda v: v is not None)),
)

action_responses = st.builds(
    ActionResponse,
    events=st.lists(events, max_size=3).map(tuple),
    responses=st.lists(responses, max_size=3).map(tuple),
)


@given(action_responses)
def test_round_trip_identity(resp):
    assert parse_action_response(serialize_action_response(resp)) == resp


@given(action_responses)
def test_serialization_is_pure(resp):
    assert serialize_action_response(resp) == serialize_action_response(resp)


@given(
    st.dictionaries(
        st.text(min_size=1, max_size=8).filter(
            lambda k: k not in ("next_action", "sender_id", "tracker")),
        slot_values,
        max_size=4,
    )
)
def test_request_tolerates_extra_fields(extra):
    tree = {"next_action": "a", "sender_id": "s", "tracker": {"slots": {}}}
    tree.update(extra)
    req = parse_action_request(jsontree.dump_bytes(tree))
    assert req.next_action == "a"

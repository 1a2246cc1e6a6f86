import pytest

from diakit.filters import Eq, FilterExpr, Gt, Or
from diakit.runtime import Composite, Engine, RuntimeFault
from diakit.values import EnumValue, StructValue

from support import SYNTH, check_text, recorder_logic


@pytest.fixture()
def synth_spec():
    return check_text(SYNTH)


@pytest.fixture()
def engine(synth_spec):
    return Engine(synth_spec)


def wire(engine):
    recorders = {}
    for c in engine.spec.components():
        rec = recorder_logic(engine.spec, c)
        engine.register_component_logic(c, rec)
        recorders[c] = rec
    engine.init_components()
    return recorders


def register_panels(engine):
    for pid, area, size, bright in (
        ("s1", "room1", 12, 70.0),
        ("s2", "room2", 8, 30.0),
        ("s3", "room3", 15, 50.0),
    ):
        engine.register_entity(
            "Panel", pid, {"area": area, "size": size, "bright": bright, "active": True}
        )


# -- registry -------------------------------------------------------------------

def test_register_then_discover(engine):
    engine.register_entity("Reader", "r1", {"area": "Hall"})
    assert engine.discover("Reader").ids == ("r1",)


def test_register_missing_attribute_named(engine):
    with pytest.raises(RuntimeFault) as e:
        engine.register_entity("Reader", "r1", {})
    assert "area" in str(e.value) and e.value.code == "R-BAD-ATTRIBUTES"


def test_register_numeric_filter(engine):
    register_panels(engine)
    got = engine.discover("Panel", FilterExpr((("bright", Gt(40)),)))
    assert got.ids == ("s1", "s3")


def test_register_duplicate_id(engine):
    engine.register_entity("Reader", "r1", {"area": "Hall"})
    with pytest.raises(RuntimeFault) as e:
        engine.register_entity("Reader", "r1", {"area": "Hall"})
    assert e.value.code == "R-DUPLICATE-ID"


def test_register_unknown_class(engine):
    with pytest.raises(RuntimeFault) as e:
        engine.register_entity("Ghost", "g1", {})
    assert e.value.code == "R-UNKNOWN-CLASS"


def test_register_abstract_class(engine):
    with pytest.raises(RuntimeFault) as e:
        engine.register_entity("Base", "b1", {"area": "Hall"})
    assert e.value.code == "R-ABSTRACT-CLASS"


def test_register_ill_typed_attribute(engine):
    with pytest.raises(RuntimeFault) as e:
        engine.register_entity("Reader", "r1", {"area": 12})
    assert e.value.code == "R-TYPE-MISMATCH"


def test_unregister(engine):
    engine.register_entity("Reader", "r1", {"area": "Hall"})
    engine.unregister_entity("r1")
    assert engine.discover("Reader").ids == ()
    with pytest.raises(RuntimeFault):
        engine.unregister_entity("r1")


def test_unregister_keeps_enqueued_deliveries(engine):
    recs = wire(engine)
    engine.register_entity("Reader", "r1", {"area": "Hall"})
    engine.subscribe_source("Seen", engine.discover("Reader"), "badge")
    engine.publish_source("r1", "badge", "0A12")
    engine.unregister_entity("r1")
    engine.drain()
    calls = [c for c in recs["Seen"].calls if c[0] == "onNewBadge"]
    assert len(calls) == 1
    proxy, value = calls[0][1]
    assert value == "0A12" and proxy.id == "r1"
    # after the unregister, nothing from r1 can publish again
    with pytest.raises(RuntimeFault):
        engine.publish_source("r1", "badge", "later")


# -- discovery -------------------------------------------------------------------

def test_discover_paper_disjunction(engine):
    register_panels(engine)
    f = FilterExpr((("area", Or(Eq("room1"), Eq("room2"))),))
    assert engine.discover("Panel", f).ids == ("s1", "s2")


def test_discover_conjunction_of_clauses(engine):
    register_panels(engine)
    engine.register_entity(
        "Panel", "s4", {"area": "room1", "size": 8, "bright": 1.0, "active": False}
    )
    got = engine.discover("Panel", "area(room1),size(gt(10))")
    assert got.ids == ("s1",)


def test_discover_empty(engine):
    assert engine.discover("Panel").ids == ()


def test_discover_unknown_attribute(engine):
    with pytest.raises(RuntimeFault) as e:
        engine.discover("Panel", FilterExpr((("nope", Eq("x")),)))
    assert e.value.code == "R-UNKNOWN-ATTR"


def test_discover_ordering_on_non_numeric(engine):
    with pytest.raises(RuntimeFault) as e:
        engine.discover("Panel", FilterExpr((("area", Gt("a")),)))
    assert e.value.code == "R-BAD-FILTER"


def test_discover_includes_subclasses(engine):
    register_panels(engine)
    engine.register_entity("Reader", "r1", {"area": "room1"})
    got = engine.discover("Base", FilterExpr((("area", Eq("room1")),)))
    assert got.ids == ("r1", "s1")


def test_any_one_minimum_id(engine):
    assert engine.any_one(Composite("Panel", ("p1", "p2"))) == "p1"
    assert engine.any_one(Composite("Panel", ("p1",))) == "p1"
    with pytest.raises(RuntimeFault) as e:
        engine.any_one(Composite("Panel", ()))
    assert e.value.code == "R-EMPTY-COMPOSITE"


# -- push ------------------------------------------------------------------------

def test_publish_delivers_to_subscriber(engine):
    recs = wire(engine)
    engine.register_entity("Reader", "r1", {"area": "Hall"})
    engine.subscribe_source("Seen", engine.discover("Reader"), "badge")
    engine.publish_source("r1", "badge", "0A12")
    engine.drain()
    (call,) = [c for c in recs["Seen"].calls if c[0] == "onNewBadge"]
    proxy, value = call[1]
    assert proxy.id == "r1" and proxy.attribute("area") == "Hall"
    assert value == "0A12"


def test_publish_without_subscribers_records_only(engine):
    wire(engine)
    engine.register_entity("Reader", "r1", {"area": "Hall"})
    engine.publish_source("r1", "badge", "X")
    engine.drain()
    assert [e.kind for e in engine.events] == ["sourcePublish"]


def test_publish_delivery_in_registration_order(engine):
    recs = wire(engine)
    engine.register_entity("Reader", "r1", {"area": "Hall"})
    readers = engine.discover("Reader")
    engine.subscribe_source("Seen", readers, "badge")
    engine.subscribe_source("Mirror", readers, "badge")
    order = []
    recs["Seen"].onNewBadge = lambda api, p, v: order.append("Seen")
    recs["Mirror"].onNewBadge = lambda api, p, v: order.append("Mirror")
    engine.register_component_logic("Seen", recs["Seen"])
    engine.register_component_logic("Mirror", recs["Mirror"])
    engine.publish_source("r1", "badge", "X")
    engine.drain()
    assert order == ["Seen", "Mirror"]


def test_publish_type_mismatch(engine):
    wire(engine)
    engine.register_entity("Reader", "r1", {"area": "Hall"})
    with pytest.raises(RuntimeFault) as e:
        engine.publish_source("r1", "badge", 42)
    assert e.value.code == "R-TYPE-MISMATCH"


def test_publish_unknown_source(engine):
    engine.register_entity("Reader", "r1", {"area": "Hall"})
    with pytest.raises(RuntimeFault) as e:
        engine.publish_source("r1", "nosuch", "x")
    assert e.value.code == "R-UNKNOWN-SOURCE"


def test_subscribe_unlicensed(engine):
    wire(engine)
    engine.register_entity("DB", "d1", {})
    with pytest.raises(RuntimeFault) as e:
        engine.subscribe_source("Seen", engine.discover("DB"), "rec")
    assert e.value.code == "R-UNDECLARED-INPUT"


def test_double_subscribe_is_idempotent(engine):
    recs = wire(engine)
    engine.register_entity("Reader", "r1", {"area": "Hall"})
    readers = engine.discover("Reader")
    engine.subscribe_source("Seen", readers, "badge")
    engine.subscribe_source("Seen", readers, "badge")
    engine.publish_source("r1", "badge", "X")
    engine.drain()
    assert len([c for c in recs["Seen"].calls if c[0] == "onNewBadge"]) == 1


def test_subscription_does_not_cover_later_entities(engine):
    recs = wire(engine)
    engine.register_entity("Reader", "r1", {"area": "Hall"})
    engine.subscribe_source("Seen", engine.discover("Reader"), "badge")
    engine.register_entity("Reader", "r2", {"area": "Hall"})
    engine.publish_source("r2", "badge", "X")
    engine.drain()
    assert [c for c in recs["Seen"].calls if c[0] == "onNewBadge"] == []


def test_context_publish_fans_out_to_consumers(engine):
    recs = wire(engine)
    engine.publish_context("Seen", "hello", {"where": "room1"})
    engine.drain()
    (call,) = [c for c in recs["Chain"].calls if c[0] == "onNewSeen"]
    assert call[1] == ("hello", "room1")


def test_context_publish_without_consumers(engine):
    wire(engine)
    engine.publish_context("Mirror", "x", {"where": "room1"})
    engine.drain()
    assert [e.kind for e in engine.events] == ["contextPublish"]


def test_context_publish_index_mismatch(engine):
    wire(engine)
    with pytest.raises(RuntimeFault) as e:
        engine.publish_context("Seen", "hello")  # missing 'where'
    assert e.value.code == "R-ARITY-MISMATCH"


# -- pull -------------------------------------------------------------------------

class _Table:
    def __init__(self, rows):
        self.rows = rows

    def pull(self, source, indices):
        return self.rows[indices["key"]]


def test_pull_returns_value_and_records(engine):
    engine.register_entity("DB", "d1", {}, behavior=_Table({"0A12": "alice"}))
    assert engine.pull_source("d1", "rec", {"key": "0A12"}) == "alice"
    (rec,) = engine.events
    assert rec.kind == "pull" and rec.producer == "d1" and rec.indices == {"key": "0A12"}


def test_pull_wrong_arity(engine):
    engine.register_entity("DB", "d1", {}, behavior=_Table({}))
    with pytest.raises(RuntimeFault) as e:
        engine.pull_source("d1", "rec", {})
    assert e.value.code == "R-ARITY-MISMATCH"


def test_pull_unregistered_entity(engine):
    with pytest.raises(RuntimeFault) as e:
        engine.pull_source("ghost", "rec", {"key": "x"})
    assert e.value.code == "R-UNKNOWN-ENTITY"


def test_pull_without_handler(engine):
    engine.register_entity("DB", "d1", {})
    with pytest.raises(RuntimeFault) as e:
        engine.pull_source("d1", "rec", {"key": "x"})
    assert e.value.code == "R-NO-PULL-HANDLER"


# -- command ----------------------------------------------------------------------

def test_command_fan_out_in_id_order(engine):
    wire(engine)
    register_panels(engine)
    panels = engine.discover("Panel", "area(or(eq(room1),eq(room2)))")
    engine.command("Show", panels, "Display", "show", ["hi"])
    cmd = [e for e in engine.events if e.kind == "command"]
    assert [e.producer for e in cmd] == ["s1", "s2"]
    assert all(e.name == "Display.show" for e in cmd)


def test_command_from_context_rejected(engine):
    wire(engine)
    register_panels(engine)
    with pytest.raises(RuntimeFault) as e:
        engine.command("Seen", engine.discover("Panel"), "Display", "show", ["hi"])
    assert e.value.code == "R-UNDECLARED-ACTION"


def test_command_empty_composite(engine):
    wire(engine)
    engine.command("Show", Composite("Panel", ()), "Display", "show", ["hi"])
    assert [e for e in engine.events if e.kind == "command"] == []


def test_command_signature_mismatch(engine):
    wire(engine)
    register_panels(engine)
    panels = engine.discover("Panel")
    with pytest.raises(RuntimeFault):
        engine.command("Show", panels, "Display", "show", [])
    with pytest.raises(RuntimeFault):
        engine.command("Show", panels, "Display", "show", [42])


# -- component logic registration ----------------------------------------------------

def test_missing_handler_named(engine):
    with pytest.raises(RuntimeFault) as e:
        engine.register_component_logic("Seen", {"init": lambda api: None})
    assert e.value.code == "R-MISSING-HANDLER" and "onNewBadge" in str(e.value)


def test_complete_logic_accepted(engine):
    engine.register_component_logic(
        "Seen", {"init": lambda api: None, "onNewBadge": lambda api, p, v: None}
    )


def test_extra_handler_rejected(engine):
    with pytest.raises(RuntimeFault) as e:
        engine.register_component_logic(
            "Seen",
            {
                "init": lambda api: None,
                "onNewBadge": lambda api, p, v: None,
                "onNewFoo": lambda api, v: None,
            },
        )
    assert e.value.code == "R-EXTRA-HANDLER" and "onNewFoo" in str(e.value)


# -- trace invariants ------------------------------------------------------------------

def test_per_producer_fifo(engine):
    recs = wire(engine)
    engine.register_entity("Reader", "r1", {"area": "Hall"})
    engine.subscribe_source("Seen", engine.discover("Reader"), "badge")
    seen = []
    recs["Seen"].onNewBadge = lambda api, p, v: seen.append(v)
    engine.register_component_logic("Seen", recs["Seen"])
    for i in range(5):
        engine.publish_source("r1", "badge", f"b{i}")
    engine.drain()
    assert seen == [f"b{i}" for i in range(5)]


def test_causality_chain_through_layers(synth_spec):
    engine = Engine(synth_spec)

    class SeenLogic:
        def init(self, api):
            api.subscribe(api.discover("Reader"), "badge")

        def onNewBadge(self, api, producer, badge):
            api.publish(badge, where=producer.attribute("area"))

    class ChainLogic:
        def init(self, api):
            pass

        def onNewSeen(self, api, value, where):
            api.publish(value)

    class ShowLogic:
        def init(self, api):
            pass

        def onNewChain(self, api, value):
            api.command(api.discover("Panel"), "show", value)

    class MirrorLogic:
        def init(self, api):
            pass

        def onNewBadge(self, api, producer, badge):
            pass

    engine.register_component_logic("Seen", SeenLogic())
    engine.register_component_logic("Mirror", MirrorLogic())
    engine.register_component_logic("Chain", ChainLogic())
    engine.register_component_logic("Show", ShowLogic())
    engine.register_entity("Reader", "r1", {"area": "Hall"})
    engine.register_entity(
        "Panel", "s1", {"area": "Hall", "size": 10, "bright": 5.0, "active": True}
    )
    engine.init_components()
    engine.publish_source("r1", "badge", "0A12")
    engine.drain()

    by_seq = {e.seq: e for e in engine.events}
    commands = [e for e in engine.events if e.kind == "command"]
    assert commands
    for cmd in commands:
        assert by_seq[cmd.cause].kind == "controllerHandle"  # never a sourcePublish
        cur = cmd
        kinds = []
        while cur.cause is not None:
            cur = by_seq[cur.cause]
            kinds.append(cur.kind)
        assert kinds[-1] == "sourcePublish"
        assert set(kinds) <= {"controllerHandle", "contextPublish", "sourcePublish"}


def test_subclass_polymorphic_discovery(newscast_spec):
    engine = Engine(newscast_spec)
    area = StructValue("Area", {"name": "Hall"})
    engine.register_entity("BadgeReader", "br1", {"area": area})
    engine.register_entity("Screen", "s1", {"area": area, "brightness": 50})
    engine.register_entity("LoudSpeaker", "ls1", {"area": area})
    got = engine.discover("LocatedDevice")
    assert got.ids == ("br1", "ls1", "s1")


def test_struct_and_enum_boundary_validation(newscast_spec):
    engine = Engine(newscast_spec)
    bad_area = StructValue("Area", {"nom": "Hall"})
    with pytest.raises(RuntimeFault):
        engine.register_entity("BadgeReader", "br1", {"area": bad_area})
    engine.register_entity(
        "BadgeReader", "br1", {"area": StructValue("Area", {"name": "Hall"})}
    )
    engine.register_entity("BuildingStatus", "bs1", {})
    with pytest.raises(RuntimeFault):
        engine.publish_source("bs1", "state", EnumValue("BuildingState", "AJAR"))
    engine.publish_source("bs1", "state", EnumValue("BuildingState", "OPEN"))

"""Built-in reference logic for the Newscast fixture, selected by component name.

The fixture itself (taxonomy, architecture, walkthrough scenario) ships as
package data; `fixture_sources` and `load_spec` give programmatic access.
"""

from __future__ import annotations

from importlib.resources import files
from pathlib import Path
from typing import Any

from . import filters
from .checker import check
from .model import CheckedSpec
from .parser import parse
from .values import EnumValue, StructValue


def fixture_dir() -> Path:
    return Path(str(files("diakit") / "fixtures" / "newscast"))

def fixture_paths() -> list[Path]:
    d = fixture_dir()
    return [d / "taxonomy.diaspec", d / "architecture.diaspec"]

def scenario_path() -> Path:
    return fixture_dir() / "walkthrough.scenario.json"

def fixture_sources() -> list[tuple[str, str]]:
    return [(str(p), p.read_text(encoding="utf-8")) for p in fixture_paths()]

def load_spec() -> CheckedSpec:
    model, diags = parse(fixture_sources())
    assert not diags, diags
    return check(model)


def _dominant(profiles: list[Any], field: str) -> EnumValue | None:
    """Most frequent enum value of a profile field; earliest seen wins ties."""
    counts: dict[EnumValue, int] = {}
    for p in profiles:
        v = p.fields[field]
        counts[v] = counts.get(v, 0) + 1
    best = None
    for v, n in counts.items():
        if best is None or n > counts[best]:
            best = v
    return best


def _by_area(area: Any) -> filters.FilterExpr:
    return filters.FilterExpr((("area", filters.Eq(area)),))


class ProximityLogic:
    """Maps detected badges to user profiles, keeping a per-area list."""

    def __init__(self):
        self.entries: dict[Any, list[tuple[str, Any]]] = {}

    def init(self, api):
        readers = api.discover("BadgeReader")
        api.subscribe(readers, "badgeDetected")
        api.subscribe(readers, "badgeDisappeared")

    def onNewBadgeDetected(self, api, producer, badge):
        profile = self._profile_for(api, badge)
        if profile is None:
            return
        area = producer.attribute("area")
        entries = self.entries.setdefault(area, [])
        entries.append((badge, profile))
        api.publish([p for _, p in entries], area=area)

    def onNewBadgeDisappeared(self, api, producer, badge):
        area = producer.attribute("area")
        entries = self.entries.setdefault(area, [])
        for i, (b, _) in enumerate(entries):
            if b == badge:
                del entries[i]
                break
        api.publish([p for _, p in entries], area=area)

    def onNewProfile(self, api, producer, profile, badge):
        pass  # profile pushes are not interesting; profiles are pulled on demand

    def _profile_for(self, api, badge):
        dbs = api.discover("ProfileDB")
        if not dbs.ids:
            return None
        return api.any_one(dbs).pull("profile", badge=badge)


class LanguageSelectorLogic:
    def init(self, api):
        pass  # context inputs arrive automatically

    def onNewProximity(self, api, profiles, area):
        lang = _dominant(profiles, "language")
        if lang is not None:
            api.publish(lang, area=area)


class DepartmentSelectorLogic:
    def init(self, api):
        pass

    def onNewProximity(self, api, profiles, area):
        dept = _dominant(profiles, "department")
        if dept is not None:
            api.publish(dept, area=area)


class ClassReminderLogic:
    """Publishes a reminder while the building is open and a schedule is known."""

    def __init__(self):
        self.schedule = None
        self.state = None

    def init(self, api):
        api.subscribe(api.discover("ScheduleDB"), "todaySchedule")
        api.subscribe(api.discover("BuildingStatus"), "state")

    def onNewTodaySchedule(self, api, producer, schedule):
        self.schedule = schedule
        self._refresh(api)

    def onNewState(self, api, producer, state):
        self.state = state
        self._refresh(api)

    def _refresh(self, api):
        if self.schedule is None or self.state != EnumValue("BuildingState", "OPEN"):
            return
        entries = self.schedule.fields["entries"]
        message = f"Next class: {entries[0]}" if entries else "No classes today"
        api.publish(StructValue("Reminder", {"message": message}))


class ScheduleSelectorLogic:
    def __init__(self):
        self.schedule = None

    def init(self, api):
        api.subscribe(api.discover("ScheduleDB"), "todaySchedule")

    def onNewTodaySchedule(self, api, producer, schedule):
        self.schedule = schedule

    def onNewDepartmentSelector(self, api, department, area):
        schedule = self.schedule
        if schedule is None:
            dbs = api.discover("ScheduleDB")
            if not dbs.ids:
                return
            schedule = api.any_one(dbs).pull("todaySchedule")
        api.publish(schedule, area=area)


class NewsSelectorLogic:
    def __init__(self):
        self.latest = None

    def init(self, api):
        api.subscribe(api.discover("NewsProvider"), "news")

    def onNewNews(self, api, producer, news, topic):
        self.latest = news

    def onNewLanguageSelector(self, api, language, area):
        news = self.latest
        if news is None:
            news = StructValue(
                "News",
                {"title": "Campus update", "content": f"Headlines in {language.value}"},
            )
        api.publish(news, area=area)


class VisualManagerLogic:
    def init(self, api):
        pass

    def onNewNewsSelector(self, api, news, area):
        screens = api.discover("Screen", _by_area(area))
        info = StructValue("Information", {"content": news.fields["content"]})
        api.command(screens, "display", info)

    def onNewScheduleSelector(self, api, schedule, area):
        screens = api.discover("Screen", _by_area(area))
        entries = ", ".join(schedule.fields["entries"])
        info = StructValue("Information", {"content": f"Schedule: {entries}"})
        api.command(screens, "display", info)


class AudioManagerLogic:
    def init(self, api):
        pass

    def onNewClassReminder(self, api, reminder):
        speakers = api.discover("LoudSpeaker")
        audio = StructValue("Audio", {"content": reminder.fields["message"]})
        api.command(speakers, "play", audio)


def builtin_logic() -> dict[str, Any]:
    """Fresh logic instances for every Newscast component, keyed by name."""
    return {
        "ClassReminder": ClassReminderLogic(),
        "Proximity": ProximityLogic(),
        "LanguageSelector": LanguageSelectorLogic(),
        "DepartmentSelector": DepartmentSelectorLogic(),
        "ScheduleSelector": ScheduleSelectorLogic(),
        "NewsSelector": NewsSelectorLogic(),
        "VisualManager": VisualManagerLogic(),
        "AudioManager": AudioManagerLogic(),
    }

"""Report rendering: human tables or canonical JSON.

A ``Report`` plays the part of a message card: a title, a few named fields,
a list of checks with status marks and a JSON payload.  JSON output is
canonical (sorted keys) so identical runs give byte-identical reports.
"""

import json
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Tuple

from .config import Config

HUMAN = 'human'
JSON = 'json'
FORMATS = (HUMAN, JSON)


def _status(passed: Optional[bool]) -> str:
    if passed is None:
        return 'skip'
    return 'pass' if passed else 'fail'


@dataclass
class Report:
    """One command's output."""

    title: str
    description: str = ''
    fields: List[Tuple[str, str]] = field(default_factory=list)
    checks: List[Dict[str, Any]] = field(default_factory=list)
    data: Dict[str, Any] = field(default_factory=dict)
    failed: bool = False

    @property
    def passed(self) -> bool:
        return not self.failed and all(c['status'] != 'fail' for c in self.checks)

    def add_field(self, name: str, value: Any) -> 'Report':
        self.fields.append((name, str(value)))
        return self

    def add_check(self, name: str, passed: Optional[bool], detail: str = '',
                  provenance: Optional[str] = None) -> 'Report':
        check: Dict[str, Any] = {'name': name, 'status': _status(passed), 'detail': detail}
        if provenance:
            check['provenance'] = provenance
        self.checks.append(check)
        return self

    def add_checklist(self, items: Iterable[Any], prefix: str = '') -> 'Report':
        """Append CheckItem-like objects (name, passed, detail)."""
        for item in items:
            self.add_check(prefix + item.name, item.passed, item.detail)
        return self

    def to_json(self) -> Dict[str, Any]:
        return {
            'title': self.title,
            'passed': self.passed,
            'fields': {name: value for name, value in self.fields},
            'checks': self.checks,
            'data': self.data,
        }

    def render(self, fmt: Optional[str] = None) -> str:
        fmt = fmt or Config.FORMAT
        if fmt == JSON:
            return dumps(self.to_json())
        return self._render_human()

    def _render_human(self) -> str:
        lines = [f"== {self.title} =="]
        if self.description:
            lines.append(self.description)
        width = max((len(name) for name, _ in self.fields), default=0)
        for name, value in self.fields:
            lines.append(f"  {name.ljust(width)} : {value}")
        for check in self.checks:
            mark = Config.get_mark(check['status'])
            tag = f" [{check['provenance']}]" if 'provenance' in check else ''
            detail = f"  ({check['detail']})" if check['detail'] else ''
            lines.append(f"[{mark}] {check['name']}{tag}{detail}")
        lines.append(f"result: {Config.get_mark('pass' if self.passed else 'fail')}")
        return '\n'.join(lines)


def dumps(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2, default=str)


def certificate_report(cert: Any, title: Optional[str] = None) -> Report:
    """A DecompositionCertificate as a report: numbers as fields, checklist as checks."""
    report = Report(title or cert.tag, f"group: {cert.group.label()}")
    for name, family in sorted(cert.families.items()):
        report.add_field(f"|{name}|", len(family))
    for name, value in sorted(cert.numbers.items()):
        if not isinstance(value, (dict, list)):
            report.add_field(name, value)
    report.add_checklist(cert.checklist)
    for claim in cert.out_of_scope:
        report.add_check(claim, None, 'out of scope')
    report.data = cert.to_json()
    return report

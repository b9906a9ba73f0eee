# synthgen/truth.py
"""
Ground-truth sidecar files::

    # types=2
    # members 0: 12 7 40
    # members 1: 7 40 12
    0 200 forward 1.0
    1 618 reverse 1.0

Records are ``type center_bin direction warp``.
"""

from pathlib import Path

from spikecore.exceptions import SpikeFormatError

from .specs import DIRECTIONS, GroundTruth, Occurrence


def save_ground_truth(truth, path):
    path = Path(path)
    with path.open('w') as out:
        out.write(f'# types={len(truth.members_per_type)}\n')
        for k, members in enumerate(truth.members_per_type):
            out.write(f'# members {k}: {" ".join(str(n) for n in members)}\n')
        for o in truth.occurrences:
            out.write(f'{o.type_index} {o.center} {o.direction} {o.warp!r}\n')
    return path


def load_ground_truth(path):
    members = {}
    occurrences = []
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        text = raw.strip()
        if not text:
            continue
        if text.startswith('#'):
            body = text[1:].strip()
            if body.startswith('members'):
                label, _, neurons = body.partition(':')
                try:
                    members[int(label.split()[1])] = tuple(int(n) for n in neurons.split())
                except (IndexError, ValueError):
                    raise SpikeFormatError(f'malformed members line {text!r}', path, line_no) from None
            continue
        fields = text.split()
        if len(fields) != 4 or fields[2] not in DIRECTIONS:
            raise SpikeFormatError(f'expected "type center direction warp", got {text!r}',
                                   path, line_no)
        try:
            occurrences.append(Occurrence(int(fields[0]), int(fields[1]), fields[2],
                                          float(fields[3])))
        except ValueError:
            raise SpikeFormatError(f'non-numeric field in {text!r}', path, line_no) from None
    ordered = tuple(members[k] for k in sorted(members))
    return GroundTruth(tuple(occurrences), ordered)

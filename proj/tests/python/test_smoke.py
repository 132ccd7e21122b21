import datetime
import zipfile

import pytest

import sheetreader

CONTENT_TYPES = """<?xml version="1.0" encoding="UTF-8"?>
<Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types">
<Default Extension="rels" ContentType="application/vnd.openxmlformats-package.relationships+xml"/>
<Default Extension="xml" ContentType="application/xml"/>
<Override PartName="/xl/workbook.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.sheet.main+xml"/>
<Override PartName="/xl/worksheets/sheet1.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.worksheet+xml"/>
</Types>"""

ROOT_RELS = """<?xml version="1.0" encoding="UTF-8"?>
<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">
<Relationship Id="rId1" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/officeDocument" Target="xl/workbook.xml"/>
</Relationships>"""

WORKBOOK = """<?xml version="1.0" encoding="UTF-8"?>
<workbook xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main" xmlns:r="http://schemas.openxmlformats.org/officeDocument/2006/relationships">
<sheets><sheet name="Data" sheetId="1" r:id="rId1"/></sheets></workbook>"""

WORKBOOK_RELS = """<?xml version="1.0" encoding="UTF-8"?>
<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">
<Relationship Id="rId1" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/worksheet" Target="worksheets/sheet1.xml"/>
<Relationship Id="rId2" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/sharedStrings" Target="sharedStrings.xml"/>
<Relationship Id="rId3" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/styles" Target="styles.xml"/>
</Relationships>"""

STYLES = """<?xml version="1.0" encoding="UTF-8"?>
<styleSheet xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main">
<cellXfs count="2"><xf numFmtId="0"/><xf numFmtId="14" applyNumberFormat="1"/></cellXfs></styleSheet>"""

STRINGS = """<?xml version="1.0" encoding="UTF-8"?>
<sst xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main" count="3" uniqueCount="3">
<si><t>id</t></si><si><t>name</t></si><si><t>café &amp; co</t></si></sst>"""


def sheet(rows):
    body = "".join(f'<row r="{i + 1}">{cells}</row>' for i, cells in enumerate(rows))
    return ('<?xml version="1.0" encoding="UTF-8"?>'
            '<worksheet xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main">'
            f"<sheetData>{body}</sheetData></worksheet>")


@pytest.fixture
def workbook(tmp_path):
    rows = [
        '<c r="A1" t="s"><v>0</v></c><c r="B1" t="s"><v>1</v></c><c r="C1"><v>1</v></c><c r="D1" t="b"><v>1</v></c>',
        '<c r="A2"><v>7</v></c><c r="B2" t="s"><v>2</v></c><c r="C2"><v>2.5</v></c><c r="D2" t="b"><v>0</v></c>'
        '<c r="E2" s="1"><v>45000.5</v></c>',
        '<c r="A3"><v>-3</v></c><c r="B3" t="inlineStr"><is><t>x,y</t></is></c>',
    ]
    path = tmp_path / "book.xlsx"
    with zipfile.ZipFile(path, "w", zipfile.ZIP_DEFLATED) as z:
        z.writestr("[Content_Types].xml", CONTENT_TYPES)
        z.writestr("_rels/.rels", ROOT_RELS)
        z.writestr("xl/workbook.xml", WORKBOOK)
        z.writestr("xl/_rels/workbook.xml.rels", WORKBOOK_RELS)
        z.writestr("xl/styles.xml", STYLES)
        z.writestr("xl/sharedStrings.xml", STRINGS)
        z.writestr("xl/worksheets/sheet1.xml", sheet(rows))
    return path


@pytest.mark.parametrize("mode", ["consecutive", "interleaved"])
def test_values_and_types(workbook, mode):
    frame = sheetreader.read_sheet(workbook, mode=mode, threads=2, headers=True)
    assert list(frame) == ["id", "name", "1", "TRUE", "E"]
    cols = list(frame.values())
    assert cols[0] == [7, -3]
    assert cols[1] == ["café & co", "x,y"]
    assert cols[2] == [2.5, None]
    assert cols[3] == [False, None]
    assert cols[4] == [datetime.datetime(2023, 3, 15, 12, 0), None]


def test_without_headers(workbook):
    frame = sheetreader.read_sheet(workbook, sheet="Data")
    assert list(frame) == ["A", "B", "C", "D", "E"]
    assert frame["A"] == ["id", "7", "-3"]
    assert frame["C"] == [1.0, 2.5, None]


def test_csv(workbook):
    csv = sheetreader.to_csv(workbook).decode()
    assert csv.splitlines()[0].startswith("id,name,1,TRUE")
    assert '"x,y"' in csv


def test_errors(tmp_path):
    bad = tmp_path / "bad.xlsx"
    bad.write_bytes(b"not a zip")
    with pytest.raises(sheetreader.ParseError):
        sheetreader.read_sheet(bad)
    with pytest.raises(ValueError):
        sheetreader.read_sheet(bad, mode="nope")

import pytest

from stopping import utils
from stopping.consts import OutputFormat
from stopping.errors import OutputFormatError
from stopping.serializers.output import Output


@pytest.fixture
def content() -> bytes:
    return b"i,T_i\n0,1\n1,0\n"


def test_output_creation(content: bytes):
    output = Output(content)
    assert output.content == content
    assert output.fmt == OutputFormat.JSON
    assert output.status_code == 0
    assert output.etag == utils.etag(content)
    assert output.content_type == "application/json; charset=utf-8"
    assert output.text == content.decode()

    for fmt in OutputFormat.supported():
        output = Output(content=content, fmt=fmt, status_code=1)
        assert output.fmt == fmt
        assert output.status_code == 1
        assert output.etag == utils.etag(content)
        assert output.content_type.startswith(fmt.content_type)


def test_invalid_format_output_creation(content: bytes):
    with pytest.raises(OutputFormatError) as excinfo:
        Output(content=content, fmt="xml")

    ex: OutputFormatError = excinfo.value
    assert ex.fmt == "xml"
    assert ex.supported == OutputFormat.supported()

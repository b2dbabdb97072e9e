from typing import Optional, Union

from stopping import utils
from stopping.consts import OutputFormat
from stopping.errors import OutputFormatError


class Output:
    """A serialized document ready to be written or sent.

    Parameters
    ----------
    content : bytes
        UTF-8 encoded document.
    fmt : OutputFormat
        Format of the document.
    status_code : int
        0 on success, 1 for a validation error, 2 for a failed verification.

    Raises
    ------
    OutputFormatError
        For unsupported formats.
    """

    def __init__(
        self,
        content: bytes,
        fmt: Union[str, OutputFormat] = OutputFormat.JSON,
        status_code: int = 0,
    ):
        self.content = content
        self.status_code = status_code

        if not isinstance(fmt, OutputFormat):
            raise OutputFormatError(fmt=fmt, supported=OutputFormat.supported())
        self.fmt = fmt
        self.__etag: Optional[str] = None

    @property
    def etag(self) -> str:
        """Return a unique ETag for the content."""
        if self.__etag is None:
            self.__etag = utils.etag(self.content)
        return self.__etag

    @property
    def content_type(self) -> str:
        return f"{self.fmt.content_type}; charset=utf-8"

    @property
    def text(self) -> str:
        return self.content.decode("utf-8")

import logging

import ujson


# By default a FileHandler writes the formatted message - overwrite to write
# one json object per record, so run logs can be parsed next to the reports
class UJsonFileHandler(logging.FileHandler):
    def format(self, record: logging.LogRecord) -> str:
        record.message = record.getMessage()
        payload = {
            "time": record.created,
            "name": record.name,
            "level": record.levelname,
            "message": record.message,
        }
        try:
            return ujson.dumps(payload)

        # In case the record contains something odd, convert it to str
        except TypeError:
            return ujson.dumps({k: str(v) for k, v in payload.items()})

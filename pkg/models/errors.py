"""
File: models/errors.py
Purpose: Exception hierarchy shared by the library, the CLI and the HTTP API
Version: 1.0.0
Author: StreamFirst Team

Every error carries a stable ``code`` so the CLI can print a
machine-parsable ``error: <code>: <message>`` line and the API can return
it as JSON.
"""

# ========== BASE ==========

class StreamFirstError(Exception):
    """Base class for all domain errors"""
    code = 'StreamFirstError'

    def __init__(self, message, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self):
        payload = {'error': self.code, 'message': self.message}
        if self.details:
            payload['details'] = self.details
        return payload

    def __str__(self):
        return f'{self.code}: {self.message}'


# ========== MODEL ERRORS ==========

class DimensionMismatch(StreamFirstError):
    """Layer shapes do not chain (which layer, expected vs actual)"""
    code = 'DimensionMismatch'


class InvalidSplit(StreamFirstError):
    """Split index outside [1, len(layers) - 1]"""
    code = 'InvalidSplit'


class InputTooShort(StreamFirstError):
    """Series shorter than the kernel"""
    code = 'InputTooShort'


class ModelFileError(StreamFirstError):
    """Model JSON document is malformed"""
    code = 'ModelFileError'


# ========== STREAM ERRORS ==========

class WindowOverrun(StreamFirstError):
    """Sample pushed past the window end with auto-reset disabled"""
    code = 'WindowOverrun'


class ChannelMismatch(StreamFirstError):
    """Sample width differs from the network's N_in"""
    code = 'ChannelMismatch'


# ========== TRAINING ERRORS ==========

class NonFiniteLoss(StreamFirstError):
    """Training diverged"""
    code = 'NonFiniteLoss'


# ========== SIMULATION / IO ERRORS ==========

class TraceFormatError(StreamFirstError):
    """Trace CSV is malformed (row/column diagnostics in details)"""
    code = 'TraceFormatError'


class ModelMismatch(StreamFirstError):
    """Trace and network disagree (e.g. channel count)"""
    code = 'ModelMismatch'


class ProfileError(StreamFirstError):
    """Device profile failed validation or could not be found"""
    code = 'ProfileError'

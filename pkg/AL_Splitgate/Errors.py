""" AL_Splitgate.Errors

    Domain errors raised by the toolkit. Every error carries a stable code (the class name),
    a message and a context dict so the command line can report it as JSON.
"""
## Builtin
import typing

__all__ = ["SplitgateError",
           "PatternMismatch", "SliceNotNumeric", "InvalidPattern", "RootNotFound", "EmptyDataset", "InvalidLayout",
           "ImageTooSmall", "DecodeFailure", "IoFailure",
           "InsufficientImages", "MissingGroupKey", "SingleGroupClass", "TooFewGroups", "TooFewImages",
           "UnknownId", "EmptyTest", "DuplicateId",
           "LengthMismatch", "LabelOutOfRange", "NonFiniteScore", "EmptyMatrix",
           "BadDimensions", "EmptySample",
           "EmptyTrain", "KTooLarge",
           "OverlapAboveThreshold", "DuplicatesFound"]

class SplitgateError(ValueError):
    """ Base class for all domain errors

    Attributes:
        message: human readable description
        context: extra values identifying what failed (ids, class labels, counts)
    """
    def __init__(self, message: str, **context: typing.Any):
        super().__init__(message)
        self.message = message
        self.context = context

    @property
    def code(self)-> str:
        return self.__class__.__name__

    def to_dict(self)-> dict:
        return {"code": self.code, "message": self.message, "context": {k: _plain(v) for k,v in self.context.items()}}

def _plain(value):
    """ Coerces context values to something json can write """
    if isinstance(value, (str, int, float, bool)) or value is None: return value
    if isinstance(value, (list, tuple, set)): return [_plain(v) for v in value]
    return str(value)

## ingest
class PatternMismatch(SplitgateError): pass
class SliceNotNumeric(SplitgateError): pass
class InvalidPattern(SplitgateError): pass
class RootNotFound(SplitgateError): pass
class EmptyDataset(SplitgateError): pass
class InvalidLayout(SplitgateError): pass

## hashdup
class ImageTooSmall(SplitgateError): pass
class DecodeFailure(SplitgateError): pass
class IoFailure(SplitgateError): pass

## splitter
class InsufficientImages(SplitgateError): pass
class MissingGroupKey(SplitgateError): pass
class SingleGroupClass(SplitgateError): pass
class TooFewGroups(SplitgateError): pass
class TooFewImages(SplitgateError): pass
class UnknownId(SplitgateError): pass
class EmptyTest(SplitgateError): pass
class DuplicateId(SplitgateError): pass

## metrics
class LengthMismatch(SplitgateError): pass
class LabelOutOfRange(SplitgateError): pass
class NonFiniteScore(SplitgateError): pass
class EmptyMatrix(SplitgateError): pass

## leakstats
class BadDimensions(SplitgateError): pass
class EmptySample(SplitgateError): pass

## synthbench
class EmptyTrain(SplitgateError): pass
class KTooLarge(SplitgateError): pass

## cli gates
class OverlapAboveThreshold(SplitgateError): pass
class DuplicatesFound(SplitgateError): pass

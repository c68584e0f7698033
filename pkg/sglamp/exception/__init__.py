import os
import sys


class SglException(Exception):

    def __init__(self,error_message:Exception,error_detail=sys):
        super().__init__(error_message)
        self.error_message=SglException.get_detailed_error_message(error_message=error_message,
                                                                   error_detail=error_detail)

    @staticmethod
    def get_detailed_error_message(error_message:Exception,error_detail=sys)->str:
        """
        error_message:Exception object or message
        error_detail:object of sys module
        """
        _,_,exec_tb=error_detail.exc_info()
        if exec_tb is not None:
            while exec_tb.tb_next is not None:
                exec_tb=exec_tb.tb_next
            try_block_line_number=exec_tb.tb_lineno
            exception_block_line_number=exec_tb.tb_frame.f_lineno
            file_name=exec_tb.tb_frame.f_code.co_filename
        else:
            # raised directly, not from inside an except block
            frame=sys._getframe(1)
            while frame.f_back is not None and frame.f_code.co_filename==__file__:
                frame=frame.f_back
            try_block_line_number=exception_block_line_number=frame.f_lineno
            file_name=frame.f_code.co_filename
        error_message=f"""
        Error occured in script at
        [{os.path.basename(file_name)}] at
        try block line number [{try_block_line_number}] and
        exception block line number [{exception_block_line_number}]
        error message :[{error_message}]
        """
        return error_message

    def __str__(self):
        return self.error_message

    def __repr__(self)->str:
        return f"{type(self).__name__}({self.args[0]!r})"


class ConfigurationError(SglException):
    """Invalid or unknown configuration key, or unreadable input file."""

    def __init__(self,error_message,key:str=None,error_detail=sys):
        self.key=key
        super().__init__(error_message,error_detail)


class DimensionError(SglException):
    pass


class SolverDivergenceError(SglException):
    pass


class StepSizeError(SglException):

    def __init__(self,error_message,suggested_step:float=None,error_detail=sys):
        self.suggested_step=suggested_step
        super().__init__(error_message,error_detail)


class NumericalDegeneracyError(SglException):
    pass


class CalibrationRangeError(SglException):

    def __init__(self,error_message,lambda_max:float=None,error_detail=sys):
        self.lambda_max=lambda_max
        super().__init__(error_message,error_detail)


class StateEvolutionError(SglException):
    pass


def find_cause(error:BaseException,error_type:type):
    """Walks the __cause__/__context__ chain and returns the first error of error_type."""
    seen=set()
    while error is not None and id(error) not in seen:
        if isinstance(error,error_type):
            return error
        seen.add(id(error))
        error=error.__cause__ or error.__context__
    return None

import os,sys
import struct
import yaml
import numpy as np
import pandas as pd
from sglamp.exception import SglException,ConfigurationError,DimensionError
from sglamp.constant import *


def read_yaml_file(file_path:str)->dict:
    """
    Reads a YAML file and returns the contents as a dictionary
    """
    try:
        with open(file_path,'rb') as yaml_file:
            return yaml.safe_load(yaml_file)
    except Exception as e:
        raise ConfigurationError(e,key=file_path) from e

def write_yaml_file(file_path:str,data:dict=None):
    try:
        dir_path=os.path.dirname(file_path)
        if dir_path:
            os.makedirs(dir_path,exist_ok=True)
        with open(file_path,'w') as yaml_file:
            if data is not None:
                yaml.safe_dump(data,yaml_file,sort_keys=True)
    except Exception as e:
        raise SglException(e,sys) from e

def parse_scalar(text:str):
    """Interprets a key=value right-hand side the way YAML would (numbers, booleans, null, lists)."""
    text=text.strip()
    if text.startswith('[') and text.endswith(']'):
        text=text[1:-1]
    if ',' in text:
        return [parse_scalar(part) for part in text.split(',') if part.strip()]
    value=yaml.safe_load(text) if text else None
    # yaml leaves '1e-5' as a string
    if isinstance(value,str):
        try:
            return float(value)
        except ValueError:
            return value
    return value

def read_key_value_file(file_path:str)->dict:
    """
    Reads flat key=value text: one pair per line, '#' starts a comment, lists are comma separated.
    """
    try:
        content={}
        with open(file_path,'r',encoding='utf-8') as kv_file:
            for line_number,line in enumerate(kv_file,start=1):
                line=line.split('#',1)[0].strip()
                if not line:
                    continue
                if '=' not in line:
                    raise ConfigurationError(f"line {line_number} of {file_path} is not key=value: [{line}]",key=line)
                key,value=line.split('=',1)
                content[key.strip()]=parse_scalar(value)
        return content
    except SglException:
        raise
    except Exception as e:
        raise ConfigurationError(e,key=file_path) from e

def format_value(value)->str:
    if isinstance(value,(list,tuple)):
        return ','.join(format_value(v) for v in value)
    if value is None:
        return 'null'
    if isinstance(value,(bool,np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value,(float,np.floating)):
        return repr(float(value))
    return str(value)

def write_key_value_file(file_path:str,data:dict):
    try:
        dir_path=os.path.dirname(file_path)
        if dir_path:
            os.makedirs(dir_path,exist_ok=True)
        with open(file_path,'w',encoding='utf-8',newline='\n') as kv_file:
            for key,value in data.items():
                kv_file.write(f"{key}={format_value(value)}\n")
    except Exception as e:
        raise SglException(e,sys) from e

def read_config_file(file_path:str)->dict:
    """YAML for .yaml/.yml files, key=value text for anything else."""
    if not os.path.exists(file_path):
        raise ConfigurationError(f"config file not found: [{file_path}]",key=file_path)
    if file_path.endswith(('.yaml','.yml')):
        content=read_yaml_file(file_path=file_path)
        content={} if content is None else content
        if not isinstance(content,dict):
            raise ConfigurationError(f"config file must hold a flat mapping: [{file_path}]",key=file_path)
        return content
    return read_key_value_file(file_path=file_path)

def save_matrix(file_path:str,array:np.ndarray):
    """
    Writes the SGLM layout: 16-byte header (magic, u32 rows, u32 cols, u32 flags=0)
    followed by row-major little-endian float64. Vectors are stored with cols=1.
    """
    try:
        array=np.asarray(array,dtype='<f8')
        if array.ndim==1:
            array=array.reshape(-1,1)
        if array.ndim!=2:
            raise DimensionError(f"only matrices and vectors can be saved, got ndim={array.ndim}")
        rows,cols=array.shape
        dir_path=os.path.dirname(file_path)
        if dir_path:
            os.makedirs(dir_path,exist_ok=True)
        with open(file_path,'wb') as matrix_file:
            matrix_file.write(struct.pack(MATRIX_HEADER_FORMAT,MATRIX_MAGIC,rows,cols,0))
            matrix_file.write(np.ascontiguousarray(array).tobytes(order='C'))
    except SglException:
        raise
    except Exception as e:
        raise SglException(e,sys) from e

def load_matrix(file_path:str)->np.ndarray:
    """
    Reads the SGLM binary layout, falling back to headerless comma-separated text.
    Always returns a 2-D array.
    """
    try:
        with open(file_path,'rb') as matrix_file:
            header=matrix_file.read(MATRIX_HEADER_SIZE)
            if len(header)==MATRIX_HEADER_SIZE and header[:4]==MATRIX_MAGIC:
                _,rows,cols,flags=struct.unpack(MATRIX_HEADER_FORMAT,header)
                if flags!=0:
                    raise ConfigurationError(f"unsupported matrix flags [{flags}] in {file_path}",key=file_path)
                data=np.frombuffer(matrix_file.read(),dtype='<f8')
                if data.size!=rows*cols:
                    raise DimensionError(f"{file_path}: header says {rows}x{cols} but holds {data.size} values")
                return data.reshape(rows,cols).astype(np.float64)
        frame=pd.read_csv(file_path,header=None)
        return frame.to_numpy(dtype=np.float64)
    except SglException:
        raise
    except Exception as e:
        raise ConfigurationError(e,key=file_path) from e

def save_vector(file_path:str,vector:np.ndarray):
    save_matrix(file_path=file_path,array=np.asarray(vector,dtype=np.float64).reshape(-1,1))

def load_vector(file_path:str)->np.ndarray:
    matrix=load_matrix(file_path=file_path)
    if matrix.ndim==2 and min(matrix.shape)>1:
        raise DimensionError(f"{file_path} holds a {matrix.shape} matrix, expected a vector")
    return matrix.ravel()

def save_membership(file_path:str,membership:np.ndarray):
    try:
        dir_path=os.path.dirname(file_path)
        if dir_path:
            os.makedirs(dir_path,exist_ok=True)
        pd.Series(np.asarray(membership,dtype=np.int64)).to_csv(file_path,index=False,header=False,
                                                                lineterminator='\n')
    except Exception as e:
        raise SglException(e,sys) from e

def load_membership(file_path:str)->np.ndarray:
    """Group ids, one per line or comma separated on a single line."""
    try:
        frame=pd.read_csv(file_path,header=None)
        return frame.to_numpy().ravel().astype(np.int64)
    except Exception as e:
        raise ConfigurationError(e,key=file_path) from e

def write_csv(file_path:str,frame:pd.DataFrame):
    """UTF-8, header row, LF line endings."""
    try:
        dir_path=os.path.dirname(file_path)
        if dir_path:
            os.makedirs(dir_path,exist_ok=True)
        frame.to_csv(file_path,index=False,encoding='utf-8',lineterminator='\n')
    except Exception as e:
        raise SglException(e,sys) from e

from setuptools import setup,find_packages
from typing import List

#Declaring variables for setup functions
PROJECT_NAME="sgl-amp"
VERSION="0.1.0"
AUTHOR="Tamil Selvan"
DESRCIPTION="Sparse Group LASSO solvers with approximate message passing, state evolution and calibration"

REQUIREMENT_FILE_NAME="requirements.txt"
HYPHEN_E_DOT = "-e ."

def get_requirements_list()->List[str]:
    with open(REQUIREMENT_FILE_NAME,'r') as requirement_file:
        requirement_list=requirement_file.readlines()
        requirement_list=[requirement_name.replace('\n','') for requirement_name in requirement_list]
        requirement_list=[requirement_name for requirement_name in requirement_list if requirement_name]
        if HYPHEN_E_DOT in requirement_list:
            requirement_list.remove(HYPHEN_E_DOT)
        return requirement_list

setup(
name=PROJECT_NAME,
version=VERSION,
author=AUTHOR,
description=DESRCIPTION,
packages=find_packages(exclude=["tests","tests.*","examples","examples.*"]),
install_requires=get_requirements_list(),
entry_points={"console_scripts":["sgl = sglamp.cli:main"]},
)

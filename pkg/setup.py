import os.path
import setuptools

from conekit import __version__ as conekit_version

req_path = os.path.join(os.path.dirname(__file__), 'requirements.txt')
with open(req_path, 'rt') as f:
    install_reqs = [req.rstrip('\n') for req in f.readlines() if req.strip()]


setuptools.setup(
    name='conekit',
    version=conekit_version,
    packages=setuptools.find_packages(where='.', exclude=['testing', 'testing.*', 'docs', 'docs.*']),
    license='',
    description='Exact lattice hulls, fundamental cones and face stabilizers for discrete groups acting on convex cones',
    include_package_data=True,
    package_data={
        'conekit': ['py.typed', 'schemas/*.json']
    },
    entry_points={
        'console_scripts': ['conekit = conekit.cli:main']
    },
    install_requires=install_reqs
)

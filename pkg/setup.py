from setuptools import setup

setup(
    name='seq-thermometry',
    version='0.1',
    description='Sequential Ramsey thermometry of dephasing baths: correlations, Fisher bounds, '
                'record simulation, temperature estimation and noise spectroscopy',
    license='apache2',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'License :: OSI Approved :: Apache Software License',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
    ],
    packages=['seq_thermometry', 'pytest_thermometry'],
    python_requires='>=3.8',
    install_requires=[
        'numpy',
        'pytest',
        'retrying',
        'scipy'],
    entry_points={
        'console_scripts': [
            'seq-thermometry = seq_thermometry.cli:main']}
)

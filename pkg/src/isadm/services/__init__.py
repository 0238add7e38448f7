"""Services orchestrating the domain modules and returning ServiceResult objects."""
